"""
Sampled entrance profile read from a CSV table.
"""
import csv
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..core.gas_state import BackgroundState
from ..errors import ConfigError
from .base import ENTRANCE_RADIUS, EntranceProfile

TABLE_COLUMNS = ("r", "S_en", "nu_en", "ur_en")


def load_profile_table(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read r,S_en,nu_en,ur_en columns; r must cover [0, 1/2] increasingly."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"profile.table_path: file not found: {path}")

    rows: List[Dict[str, str]] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in TABLE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"profile.table_path: missing columns {missing} in {path}")
        for row in reader:
            rows.append(row)

    try:
        table = {c: np.array([float(row[c]) for row in rows]) for c in TABLE_COLUMNS}
    except ValueError as e:
        raise ConfigError(f"profile.table_path: non-numeric entry in {path}: {e}") from e

    r = table["r"]
    if r.size < 4:
        raise ConfigError("profile.table_path: at least 4 samples required")
    if np.any(np.diff(r) <= 0.0):
        raise ConfigError("profile.table_path: radii must be strictly increasing")
    if r[0] != 0.0 or abs(r[-1] - ENTRANCE_RADIUS) > 1e-12:
        raise ConfigError("profile.table_path: radii must span [0, 0.5]")
    return table


class TableProfile(EntranceProfile):
    """Monotone-cubic interpolation of tabulated entrance data."""

    family = "table"

    def __init__(self, background: BackgroundState, *, table_path: Union[str, Path],
                 **kwargs: Any):
        super().__init__(background, **kwargs)
        self.table_path = str(table_path)
        table = load_profile_table(table_path)
        r = table["r"]
        self._S = PchipInterpolator(r, table["S_en"] - background.S0_minus)
        self._nu = PchipInterpolator(r, table["nu_en"])
        self._ur = PchipInterpolator(r, table["ur_en"])

    def _entropy_perturbation(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self._S(r))

    def _swirl_speed(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self._nu(r))

    def _radial_speed(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self._ur(r))

    def _axis_slopes(self) -> Tuple[float, float]:
        return float(self._S.derivative()(0.0)), float(self._nu.derivative()(0.0))

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info["table_path"] = self.table_path
        return info
