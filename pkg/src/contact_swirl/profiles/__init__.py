"""
Entrance profile families.
"""
from typing import Any, Dict, Type

from ..core.gas_state import BackgroundState
from ..errors import ConfigError
from .base import ENTRANCE_RADIUS, EntranceProfile
from .bump import BumpProfile, RandomBumpProfile
from .table import TableProfile, load_profile_table

PROFILE_FAMILIES: Dict[str, Type[EntranceProfile]] = {
    "bump": BumpProfile,
    "random": RandomBumpProfile,
    "table": TableProfile,
}


def create_profile(family: str, background: BackgroundState,
                   **params: Any) -> EntranceProfile:
    """Instantiate a registered profile family and run its entrance gates."""
    if family not in PROFILE_FAMILIES:
        raise ConfigError(
            f"profile.family: unknown family '{family}' "
            f"(available: {sorted(PROFILE_FAMILIES)})"
        )
    profile = PROFILE_FAMILIES[family](background, **params)
    profile.validate()
    return profile


__all__ = [
    "ENTRANCE_RADIUS",
    "EntranceProfile",
    "BumpProfile",
    "RandomBumpProfile",
    "TableProfile",
    "PROFILE_FAMILIES",
    "create_profile",
    "load_profile_table",
]
