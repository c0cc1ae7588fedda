"""
Streamline transport of entropy and angular momentum density.

S and Lambda are constant along streamlines, so they are obtained by
composition: the stream function w = int_0^r s rho u_x ds is inverted against
its entrance column to give the footpoint radius R0(x, r), and then
S = S_en(R0), Lambda = R0 nu_en(R0). The transported pair is extended past the
contact radius onto the strip r < 3/4 by a three-term reflection that matches
values and two radial derivatives at r = f.
"""
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator, RegularGridInterpolator

from ..errors import (
    AxisCompatibilityError,
    ExtensionRangeError,
    FluxImbalanceError,
    TransportDegeneracyError,
    first_violation,
)
from .free_boundary import ANCHOR, FreeBoundaryCurve, check_flux_floor
from .gas_state import BackgroundState
from .geometry import MetricCoefficients

if TYPE_CHECKING:
    from ..profiles.base import EntranceProfile

logger = logging.getLogger(__name__)

EXTENSION_COEFFS = np.array([6.0, -32.0, 27.0])
STRIP_TOP = 0.75
BISECTION_STEPS = 60
FLUX_RANGE_TOLERANCE = 1e-3
CLAMP_WARNING = 1e-10
AXIS_TOLERANCE = 1e-14
FOOTPOINT_RATIO_BOUND = np.sqrt(3.0)
MONOTONE_SLACK = 1e-14


def extension_moments(coeffs: np.ndarray = EXTENSION_COEFFS) -> np.ndarray:
    """sum_i c_i (-1/i)^m for m = 0, 1, 2."""
    i = np.arange(1, len(coeffs) + 1, dtype=float)
    return np.array([float(np.sum(coeffs * (-1.0 / i) ** m)) for m in range(3)])


@dataclass(frozen=True, eq=False)
class StreamFunctionField:
    values: np.ndarray
    method: str = "trapezoid"

    @property
    def entrance_column(self) -> np.ndarray:
        return self.values[0]

    @property
    def interface_row(self) -> np.ndarray:
        return self.values[:, -1]


@dataclass(frozen=True, eq=False)
class FootpointField:
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class SwirlField:
    values: np.ndarray


def compute_stream_h(rho_ux: np.ndarray, metrics: MetricCoefficients,
                     background: BackgroundState,
                     method: str = "trapezoid") -> StreamFunctionField:
    """Columnwise cumulative mass flux int_0^r s rho u_x ds."""
    check_flux_floor(rho_ux, background)
    values = metrics.radial_cumulative(metrics.R * rho_ux, method)
    values[:, 0] = 0.0
    return StreamFunctionField(values=values, method=method)


class EntranceFluxMap:
    """
    Monotone map r -> w(0, r) on the entrance column and its inverse.

    The forward map is a PCHIP interpolant; the inverse brackets each target
    between table nodes and bisects.
    """

    def __init__(self, radii: np.ndarray, w_column: np.ndarray):
        radii = np.asarray(radii, dtype=float)
        table = np.asarray(w_column, dtype=float)
        steps = np.diff(table)
        if np.any(~(steps > 0.0)):
            raise TransportDegeneracyError(
                "entrance flux column is not strictly increasing",
                location=first_violation(~(steps > 0.0)),
            )
        if radii[0] != 0.0 or table[0] != 0.0:
            raise TransportDegeneracyError("entrance flux map must start at (0, 0)")
        self.radii = radii
        self.table = table
        self._forward = PchipInterpolator(radii, table)

    @property
    def w_max(self) -> float:
        return float(self.table[-1])

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self._forward(np.clip(r, self.radii[0], self.radii[-1])))

    def inverse(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        target = np.clip(w.ravel(), 0.0, self.w_max)
        n = len(self.table)
        idx = np.clip(np.searchsorted(self.table, target, side="left"), 1, n - 1)
        lo = self.radii[idx - 1].copy()
        hi = self.radii[idx].copy()
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = self._forward(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        on_node = target == self.table[idx]
        out[on_node] = self.radii[idx[on_node]]
        out[target == 0.0] = 0.0
        return out.reshape(w.shape)


def build_entrance_flux_map(w_entrance_column: np.ndarray,
                            radii: np.ndarray) -> EntranceFluxMap:
    return EntranceFluxMap(radii, w_entrance_column)


def compute_footpoint_R0(w: StreamFunctionField, flux_map: EntranceFluxMap,
                         R: Optional[np.ndarray] = None,
                         tolerance: float = FLUX_RANGE_TOLERANCE) -> FootpointField:
    """R0 = G^{-1}(w); values beyond the entrance flux are clamped within tolerance."""
    excess = (w.values - flux_map.w_max) / flux_map.w_max
    worst = float(np.max(excess))
    if worst > tolerance:
        raise FluxImbalanceError(
            f"stream function exceeds entrance flux by {worst:.3e} (relative)",
            location=first_violation(excess > tolerance),
            value=worst,
        )
    if worst > CLAMP_WARNING:
        logger.warning("footpoint clamping: stream function exceeds entrance flux "
                       "by %.3e",
                       worst)

    R0 = flux_map.inverse(w.values)
    decreasing = np.diff(R0, axis=1) < -MONOTONE_SLACK
    if np.any(decreasing):
        raise TransportDegeneracyError(
            "footpoint radius not monotone in r",
            location=first_violation(decreasing),
        )
    if R is not None:
        interior = R > 0.0
        ratio = np.where(interior, R0 / np.where(interior, R, 1.0), 1.0)
        outside = (ratio < 1.0 / FOOTPOINT_RATIO_BOUND) | (ratio > FOOTPOINT_RATIO_BOUND)
        if np.any(outside):
            raise TransportDegeneracyError(
                "footpoint ratio R0/r outside [1/sqrt(3), sqrt(3)]",
                location=first_violation(outside),
                value=float(ratio[outside][0]),
            )
    return FootpointField(values=R0)


def transport_SLambda(profile: "EntranceProfile",
                      R0: FootpointField) -> Tuple[np.ndarray, np.ndarray]:
    S = np.asarray(profile.S_en(R0.values))
    Lambda = R0.values * np.asarray(profile.nu_en(R0.values))
    return S, Lambda


def swirl_velocity(Lambda: np.ndarray, R0: FootpointField, profile: "EntranceProfile",
                   R: np.ndarray) -> SwirlField:
    """V = Lambda / r = (R0/r) nu_en(R0), with V(x, 0) = 0."""
    axis = np.abs(Lambda[:, 0])
    if np.any(axis > AXIS_TOLERANCE):
        raise AxisCompatibilityError(
            "angular momentum density nonzero on the axis",
            location=(int(np.argmax(axis)), 0),
            value=float(np.max(axis)),
        )
    interior = R > 0.0
    safe_R = np.where(interior, R, 1.0)
    values = np.where(interior,
                      R0.values / safe_R * np.asarray(profile.nu_en(R0.values)), 0.0)
    return SwirlField(values=values)


# Extension -------------------------------------------------------------------

def _extend_column(values: np.ndarray, r_col: np.ndarray, f: float,
                   target: np.ndarray, column: int) -> np.ndarray:
    spline = CubicSpline(r_col, values)
    inside = target <= f
    out = np.empty_like(target)
    out[inside] = spline(target[inside])
    r_out = target[~inside]
    if r_out.size:
        acc = np.zeros_like(r_out)
        for i, c in enumerate(EXTENSION_COEFFS, start=1):
            reflected = f - (r_out - f) / i
            if np.any(reflected < 0.0):
                raise ExtensionRangeError(
                    "reflected radius falls outside the inner region",
                    location=(column,),
                    value=float(np.min(reflected)),
                )
            acc += c * spline(reflected)
        out[~inside] = acc
    return out


def extend_field(values: np.ndarray, metrics: MetricCoefficients,
                 strip_r: np.ndarray) -> np.ndarray:
    """Sample a grid field on strip radii, reflecting past r = f(x)."""
    out = np.empty((values.shape[0], len(strip_r)))
    for i in range(values.shape[0]):
        out[i] = _extend_column(values[i], metrics.R[i], float(metrics.f[i]),
                                strip_r, i)
    return out


def extend_W(S: np.ndarray, Lambda: np.ndarray, metrics: MetricCoefficients,
             strip_r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Extend (S, Lambda) from r <= f(x) onto the strip radii (up to 3/4)."""
    if strip_r[-1] > STRIP_TOP + 1e-12:
        raise ExtensionRangeError(f"strip extends beyond r = {STRIP_TOP}",
                                  value=float(strip_r[-1]))
    return extend_field(S, metrics, strip_r), extend_field(Lambda, metrics, strip_r)


def strip_radii(nr: int) -> np.ndarray:
    """Uniform strip nodes on [0, 3/4] with spacing close to the inner h_r."""
    n = int(np.ceil(1.5 * nr))
    return np.linspace(0.0, STRIP_TOP, n + 1)


@dataclass(frozen=True, eq=False)
class TransportSample:
    S: np.ndarray
    dr_S: np.ndarray
    Lambda: np.ndarray
    dr_Lambda: np.ndarray
    swirl: np.ndarray


@dataclass(frozen=True, eq=False)
class FrozenTransport:
    """(S, Lambda, V) on the strip 0 <= r <= 3/4 at the axial nodes."""

    x: np.ndarray
    r: np.ndarray
    S: np.ndarray
    Lambda: np.ndarray
    swirl: np.ndarray
    interface: Tuple[float, float]
    splines: Tuple[Tuple[CubicSpline, CubicSpline, CubicSpline], ...] = field(
        init=False, repr=False)

    def __post_init__(self) -> None:
        # zero slope at the axis
        bc = ((1, 0.0), "not-a-knot")
        splines = tuple(
            (CubicSpline(self.r, self.S[i], bc_type=bc),
             CubicSpline(self.r, self.Lambda[i], bc_type=bc),
             CubicSpline(self.r, self.swirl[i], bc_type=bc))
            for i in range(len(self.x))
        )
        object.__setattr__(self, "splines", splines)

    def sample(self, R: np.ndarray) -> TransportSample:
        """Values and radial derivatives at the physical radii R (per column)."""
        splines = self.splines
        out = {name: np.empty_like(R) for name in ("S", "dS", "L", "dL", "V")}
        for i, (s_S, s_L, s_V) in enumerate(splines):
            out["S"][i] = s_S(R[i])
            out["dS"][i] = s_S(R[i], 1)
            out["L"][i] = s_L(R[i])
            out["dL"][i] = s_L(R[i], 1)
            out["V"][i] = s_V(R[i])
        out["L"][:, 0] = 0.0
        out["V"][:, 0] = 0.0
        out["dS"][:, 0] = 0.0
        return TransportSample(S=out["S"], dr_S=out["dS"], Lambda=out["L"],
                               dr_Lambda=out["dL"], swirl=out["V"])

    def change_from(self, other: "FrozenTransport", background: BackgroundState) -> float:
        """max(|dS|/S0, |dV|/u0) over the strip."""
        dS = float(np.max(np.abs(self.S - other.S))) / background.S0_minus
        dV = float(np.max(np.abs(self.swirl - other.swirl))) / background.u0
        return max(dS, dV)

    def relaxed(self, previous: "FrozenTransport", omega: float) -> "FrozenTransport":
        if omega == 1.0:
            return self

        def mix(new: np.ndarray, old: np.ndarray) -> np.ndarray:
            return old + omega * (new - old)

        return FrozenTransport(x=self.x, r=self.r, S=mix(self.S, previous.S),
                               Lambda=mix(self.Lambda, previous.Lambda),
                               swirl=mix(self.swirl, previous.swirl),
                               interface=self.interface)


def build_frozen_transport(S: np.ndarray, Lambda: np.ndarray, swirl: SwirlField,
                           metrics: MetricCoefficients, strip_r: np.ndarray,
                           interface: Tuple[float, float]) -> FrozenTransport:
    S_ext, L_ext = extend_W(S, Lambda, metrics, strip_r)
    V_in = extend_field(swirl.values, metrics, strip_r)
    f = metrics.f[:, None]
    r = strip_r[None, :]
    V_ext = np.where(r <= f, V_in, L_ext / np.where(r > 0.0, r, 1.0))
    V_ext[:, 0] = 0.0
    L_ext[:, 0] = 0.0
    return FrozenTransport(x=metrics.grid.x.copy(), r=strip_r, S=S_ext, Lambda=L_ext,
                           swirl=V_ext, interface=interface)


def background_transport(profile: "EntranceProfile", metrics: MetricCoefficients,
                         strip_r: np.ndarray) -> FrozenTransport:
    """Transport by horizontal streamlines (R0 = r) on the flat geometry."""
    R0 = FootpointField(values=np.minimum(metrics.R, ANCHOR))
    S, Lambda = transport_SLambda(profile, R0)
    swirl = swirl_velocity(Lambda, R0, profile, metrics.R)
    return build_frozen_transport(S, Lambda, swirl, metrics, strip_r,
                                  profile.interface_values())


# Streamline oracle ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Streamline:
    x: np.ndarray
    r: np.ndarray


VelocitySampler = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


def grid_field_sampler(values: np.ndarray, metrics: MetricCoefficients
                       ) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Cubic interpolation of a grid function at physical points (x, r)."""
    grid = metrics.grid
    interp = RegularGridInterpolator((grid.xi, grid.eta), values, method="cubic")
    f_of_x = CubicSpline(metrics.curve.x, metrics.curve.values)

    def sample(x: np.ndarray, r: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r = np.atleast_1d(np.asarray(r, dtype=float))
        xi = np.clip(x / grid.L, 0.0, 1.0)
        eta = np.clip(r / f_of_x(x), 0.0, 1.0)
        return interp(np.stack([xi, eta], axis=-1))

    return sample


def grid_velocity_sampler(u_x: np.ndarray, u_r: np.ndarray,
                          metrics: MetricCoefficients) -> VelocitySampler:
    ux_i = grid_field_sampler(u_x, metrics)
    ur_i = grid_field_sampler(u_r, metrics)

    def sample(x: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return ux_i(x, r), ur_i(x, r)

    return sample


def trace_streamline_oracle(velocity: VelocitySampler, start: float, L: float,
                            n_steps: int = 400,
                            boundary: Optional[FreeBoundaryCurve] = None,
                            u_floor: float = 0.0, tolerance: float = 1e-8) -> Streamline:
    """RK4 integration of dr/dx = u_r/u_x from (0, start) to x = L."""
    h = L / n_steps
    xs = np.linspace(0.0, L, n_steps + 1)
    rs = np.empty(n_steps + 1)
    rs[0] = start
    f_of_x = (CubicSpline(boundary.x, boundary.values) if boundary is not None else None)

    def slope(x: float, r: float) -> float:
        ux, ur = velocity(np.array([x]), np.array([r]))
        if not ux[0] > u_floor:
            raise TransportDegeneracyError("axial velocity below floor on streamline",
                                           value=float(ux[0]))
        return float(ur[0] / ux[0])

    r = float(start)
    for k in range(n_steps):
        x = xs[k]
        k1 = slope(x, r)
        k2 = slope(x + 0.5 * h, r + 0.5 * h * k1)
        k3 = slope(x + 0.5 * h, r + 0.5 * h * k2)
        k4 = slope(x + h, r + h * k3)
        r = r + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        top = float(f_of_x(xs[k + 1])) if f_of_x is not None else np.inf
        if r < -tolerance or r > top + tolerance:
            raise TransportDegeneracyError(
                f"streamline from r={start} left the inner region at x={xs[k + 1]:.4g}",
                value=r,
            )
        rs[k + 1] = r
    return Streamline(x=xs, r=rs)

