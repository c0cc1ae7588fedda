"""
Contact-interface machinery: the boundary curve, the Robin data that encodes
pressure continuity, the mass-flux update of the curve and its kinematic
residual.
"""
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Union

import numpy as np
from scipy.integrate import trapezoid

from ..errors import (
    CavitationError,
    FreeBoundaryCollapseError,
    GeometryError,
    InterfaceEnergyError,
    TransportDegeneracyError,
    first_violation,
)
from .gas_state import BackgroundState

if TYPE_CHECKING:
    from .geometry import MetricCoefficients

logger = logging.getLogger(__name__)

ANCHOR = 0.5
BAND_MIN = 0.375
BAND_MAX = 0.625
RADICAND_FLOOR = 1.0 / 16.0
DRIFT_WARNING = 1e-12

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class FreeBoundaryCurve:
    """
    Contact radius f sampled on the axial nodes.

    f(0) = 1/2 exactly; the discrete slope uses centered differences with
    second-order one-sided stencils at the ends and is then clamped to zero at
    x = 0 and x = L.
    """

    x: np.ndarray
    values: np.ndarray
    anchor_drift: float = 0.0
    slope: np.ndarray = field(init=False)
    curvature: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.values.shape != self.x.shape:
            raise GeometryError("boundary samples and axial nodes differ in length")
        if self.values[0] != ANCHOR:
            raise GeometryError(
                f"free boundary must be anchored at f(0) = {ANCHOR}",
                location=(0,),
                value=float(self.values[0]),
            )
        slope = np.gradient(self.values, self.x, edge_order=2)
        slope[0] = 0.0
        slope[-1] = 0.0
        object.__setattr__(self, "slope", slope)
        object.__setattr__(self, "curvature", np.gradient(slope, self.x, edge_order=2))

    @classmethod
    def flat(cls, x: np.ndarray) -> "FreeBoundaryCurve":
        return cls(x=np.asarray(x, dtype=float), values=np.full(len(x), ANCHOR))

    @classmethod
    def anchored(cls, x: np.ndarray, values: np.ndarray) -> "FreeBoundaryCurve":
        """Build a curve after re-anchoring f(0) to 1/2; the drift is kept."""
        values = np.array(values, dtype=float)
        drift = abs(float(values[0]) - ANCHOR)
        if drift > DRIFT_WARNING:
            logger.warning("free boundary re-anchored at x=0 (drift %.3e)", drift)
        values[0] = ANCHOR
        return cls(x=np.asarray(x, dtype=float), values=values, anchor_drift=drift)

    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.values - ANCHOR)))

    def check_band(self) -> None:
        outside = (self.values < BAND_MIN) | (self.values > BAND_MAX)
        if np.any(outside):
            k = first_violation(outside)
            raise GeometryError(
                f"free boundary left the band [{BAND_MIN}, {BAND_MAX}]",
                location=k,
                value=float(self.values[k[0]]) if k else None,
            )


@dataclass(frozen=True, eq=False)
class RobinData:
    """Robin data B sampled along the interface."""

    values: np.ndarray


@dataclass(frozen=True, eq=False)
class FreeBoundaryResidual:
    values: np.ndarray
    max_norm: float
    l2_norm: float


def interface_speed(S: ArrayLike, Lambda: ArrayLike, f: ArrayLike,
                    background: BackgroundState) -> np.ndarray:
    """
    Meridional speed on the interface required by pressure continuity.

    |u_m|^2 = 2(B0 - gamma/(gamma-1) p0^(1-1/gamma) S^(1/gamma)) - (Lambda/f)^2
    """
    S = np.atleast_1d(np.asarray(S, dtype=float))
    if np.any(~(S > 0.0)):
        raise CavitationError("entropy not positive on the interface",
                              location=first_violation(~(S > 0.0)),
                              value=float(np.min(S)))
    g = background.gamma
    enthalpy = g / (g - 1.0) * background.p0 ** (1.0 - 1.0 / g) * np.power(S, 1.0 / g)
    radicand = (2.0 * (background.B0_minus - enthalpy)
                - (np.asarray(Lambda) / np.asarray(f)) ** 2)
    radicand = np.atleast_1d(radicand)
    negative = radicand < 0.0
    if np.any(negative):
        raise InterfaceEnergyError(
            "interface energy radicand negative: entrance data too large",
            location=first_violation(negative),
            value=float(np.min(radicand)),
        )
    return np.sqrt(radicand)


def robin_data_B(f: ArrayLike, f_slope: ArrayLike, S_at_interface: ArrayLike,
                 Lambda_at_interface: ArrayLike,
                 background: BackgroundState) -> RobinData:
    """B = sqrt(radicand) - u0 / sqrt(1 + f'^2)."""
    speed = interface_speed(S_at_interface, Lambda_at_interface, f, background)
    fp = np.asarray(f_slope, dtype=float)
    values = speed - background.u0 / np.sqrt(1.0 + fp * fp)
    return RobinData(values=np.atleast_1d(values))


def check_flux_floor(rho_ux: np.ndarray, background: BackgroundState) -> None:
    floor = 0.5 * background.mass_flux
    low = ~(rho_ux >= floor)
    if np.any(low):
        raise TransportDegeneracyError(
            f"axial mass flux below floor {floor:.6g}",
            location=first_violation(low),
            value=float(np.nanmin(rho_ux)),
        )


def update_free_boundary(f_star: FreeBoundaryCurve, rho_ux: np.ndarray,
                         background: BackgroundState, metrics: "MetricCoefficients",
                         method: str = "trapezoid") -> FreeBoundaryCurve:
    """
    Mass-flux update of the contact radius.

    f^2 = f*^2 + 2/(rho0 u0) [w(0, 1/2) - w(x, f*(x))], with w the columnwise
    flux integral on the geometry of f*.
    """
    check_flux_floor(rho_ux, background)
    w = metrics.radial_cumulative(metrics.R * rho_ux, method)
    top = w[:, -1]
    radicand = f_star.values**2 + 2.0 / background.mass_flux * (top[0] - top)
    low = radicand < RADICAND_FLOOR
    if np.any(low):
        raise FreeBoundaryCollapseError(
            "free-boundary radicand below 1/16",
            location=first_violation(low),
            value=float(np.min(radicand)),
        )
    curve = FreeBoundaryCurve.anchored(f_star.x, np.sqrt(radicand))
    logger.debug("free boundary update: max|f - 1/2| = %.3e, drift %.3e",
                 curve.max_deviation(), curve.anchor_drift)
    return curve


def free_boundary_ode_residual(curve: FreeBoundaryCurve, u_x: np.ndarray,
                               u_r: np.ndarray) -> FreeBoundaryResidual:
    """r(x) = f'(x) - (u_r/u_x)(x, f(x)) from the interface row of the fields."""
    values = curve.slope - u_r[:, -1] / u_x[:, -1]
    L = float(curve.x[-1] - curve.x[0])
    l2 = float(np.sqrt(trapezoid(values**2, curve.x) / L))
    return FreeBoundaryResidual(values=values, max_norm=float(np.max(np.abs(values))),
                                l2_norm=l2)
