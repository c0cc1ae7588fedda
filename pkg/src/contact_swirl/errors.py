"""
Error taxonomy for the contact-discontinuity solver.

Every error carries a machine-readable ``error_class`` and the CLI exit code it
maps to. State errors may carry the grid node ``(i, j)`` where the violation was
first detected.
"""
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


class ContactSwirlError(Exception):
    """Base class for all solver errors."""

    error_class = "contact_swirl_error"
    exit_code = 4

    def __init__(self, message: str, *, location: Optional[Tuple[int, ...]] = None,
                 value: Optional[float] = None, **context: Any):
        super().__init__(message)
        self.message = message
        self.location = location
        self.value = value
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "error_class": self.error_class,
            "message": self.message,
        }
        if self.location is not None:
            data["location"] = [int(k) for k in self.location]
        if self.value is not None:
            data["value"] = float(self.value)
        return data


# Configuration ------------------------------------------------------------

class ConfigError(ContactSwirlError):
    error_class = "config_error"
    exit_code = 3


class SupportConditionError(ConfigError):
    error_class = "support_condition_error"


# Thermodynamic state --------------------------------------------------------

class SubsonicityError(ContactSwirlError):
    error_class = "subsonicity_error"


class CavitationError(ContactSwirlError):
    error_class = "cavitation_error"


class AxisCompatibilityError(ContactSwirlError):
    error_class = "axis_compatibility_error"


class EllipticityError(ContactSwirlError):
    error_class = "ellipticity_error"


# Geometry and discretization -----------------------------------------------

class GeometryError(ContactSwirlError):
    error_class = "geometry_error"


class LinearSolverError(ContactSwirlError):
    error_class = "linear_solver_error"


class DegeneracyError(ContactSwirlError):
    error_class = "degeneracy_error"


class TransportDegeneracyError(DegeneracyError):
    error_class = "transport_degeneracy_error"


class FluxImbalanceError(ContactSwirlError):
    error_class = "flux_imbalance_error"


class ExtensionRangeError(ContactSwirlError):
    error_class = "extension_range_error"


# Free boundary ---------------------------------------------------------------

class InterfaceEnergyError(ContactSwirlError):
    error_class = "interface_energy_error"


class FreeBoundaryCollapseError(ContactSwirlError):
    error_class = "free_boundary_collapse_error"


class ConsistencyError(ContactSwirlError):
    error_class = "consistency_error"


# Iteration ---------------------------------------------------------------------

class DivergenceError(ContactSwirlError):
    """A fixed-point level failed to converge; carries its change history."""

    error_class = "divergence_error"
    exit_code = 5

    def __init__(self, message: str, *, history: Optional[List[float]] = None,
                 sigma: Optional[float] = None, **context: Any):
        super().__init__(message, **context)
        self.history = list(history or [])
        self.sigma = sigma

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["history"] = [float(h) for h in self.history]
        if self.sigma is not None:
            data["sigma"] = float(self.sigma)
        return data


class InnerDivergenceError(DivergenceError):
    error_class = "inner_divergence_error"


class MiddleDivergenceError(DivergenceError):
    error_class = "middle_divergence_error"


class OuterDivergenceError(DivergenceError):
    error_class = "outer_divergence_error"


class WallTimeExceededError(DivergenceError):
    error_class = "wall_time_exceeded"


def first_violation(mask: np.ndarray) -> Optional[Tuple[int, ...]]:
    """Index of the first ``True`` entry of ``mask``, or None."""
    hits = np.argwhere(mask)
    if hits.size == 0:
        return None
    return tuple(int(k) for k in hits[0])
