"""
Post-solve diagnostics.

Everything here is a pure function of the stored state arrays, so a state
reloaded from disk reproduces the same report.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any, Dict, List

import numpy as np

from ..errors import ConfigError, ConsistencyError, first_violation
from .free_boundary import free_boundary_ode_residual
from .gas_state import bernoulli_of
from .transport import compute_stream_h

if TYPE_CHECKING:
    from .solver import SolutionState

logger = logging.getLogger(__name__)

BERNOULLI_GATE = 1e-10
OMEGA_FACTOR = 10.0
OMEGA_FLOOR = 1e-12
TINY = 1e-300


@dataclass(frozen=True, eq=False)
class OmegaField:
    """Stream-function derivative computed from the velocity and from the flux."""

    direct: np.ndarray
    from_stream: np.ndarray
    disagreement: float
    tolerance: float


@dataclass
class ConservationSection:
    euler_residuals: Dict[str, float]
    bernoulli_deviation: float
    interface_pressure_jump: float
    interface_normal_velocity: float
    flux_imbalance: List[float]
    flux_imbalance_max: float
    subsonic_margin: float
    density_min: float
    o_floor_ratio: float
    stream_bernoulli_residual: float
    interface_trace: Dict[str, float]
    free_boundary_ode: Dict[str, float]


@dataclass
class WindowStats:
    x_start: float
    x_end: float
    ur_max: float
    ur_c1: float
    radial_balance: float
    centrifugal: float
    pressure_deviation: float
    omega_max: float


@dataclass
class FarfieldSection:
    windows: List[WindowStats]
    decay_ratios: Dict[str, float]
    decay_flags: Dict[str, bool]


@dataclass
class DiagnosticsReport:
    conservation: ConservationSection
    farfield: FarfieldSection
    omega_disagreement: float
    omega_tolerance: float
    gates: Dict[str, bool] = field(default_factory=dict)

    @property
    def flux_imbalance_max(self) -> float:
        return self.conservation.flux_imbalance_max

    @property
    def bernoulli_deviation(self) -> float:
        return self.conservation.bernoulli_deviation

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["farfield"]["policy"] = "reported only; decay flags do not gate convergence"
        return _plain(data)


def _plain(value: Any) -> Any:
    """numpy scalars to builtin floats, recursively."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _interior_max(values: np.ndarray) -> float:
    return float(np.max(np.abs(values[1:-1, 1:-1])))


def compute_omega(state: "SolutionState", method: str = "trapezoid",
                  strict: bool = False) -> OmegaField:
    """
    omega = d_x h and omega = -r rho u_r; the two must agree to the discretization error.

    With strict=True a disagreement above the tolerance raises ConsistencyError;
    otherwise it is only reported.
    """
    metrics = state.metrics
    grid = metrics.grid
    w = compute_stream_h(state.rho * state.u.u_x, metrics, state.background, method)
    from_stream = metrics.ddx(w.values)
    from_stream[:, 0] = 0.0
    direct = -metrics.R * state.rho * state.u.u_r
    h = max(grid.h_x, float(np.max(metrics.f)) * grid.h_eta)
    tolerance = OMEGA_FACTOR * h * h * state.background.mass_flux + OMEGA_FLOOR
    gap = np.abs(from_stream - direct)
    disagreement = float(np.max(gap))
    if strict and disagreement > tolerance:
        raise ConsistencyError(
            f"omega disagreement {disagreement:.3e} exceeds {tolerance:.3e}",
            location=first_violation(gap > tolerance),
            value=disagreement,
        )
    return OmegaField(direct=direct, from_stream=from_stream,
                      disagreement=disagreement, tolerance=tolerance)


def invariant_report(state: "SolutionState", method: str = "trapezoid"
                     ) -> ConservationSection:
    """Conservation, interface and positivity checks of a solution state."""
    bg = state.background
    metrics = state.metrics
    gamma = bg.gamma
    u = state.u
    rho, p, S, Lam = state.rho, state.p, state.S, state.Lambda
    R = metrics.R
    interior = R > 0.0
    safe_R = np.where(interior, R, 1.0)

    def convect(q: np.ndarray) -> np.ndarray:
        qx, qr = metrics.gradient(q)
        return rho * (u.u_x * qx + u.u_r * qr)

    continuity = metrics.ddx(rho * u.u_x) + metrics.ddr(R * rho * u.u_r) / safe_R
    radial = (convect(u.u_r) - np.where(interior, rho * u.u_theta**2 / safe_R, 0.0)
              + metrics.ddr(p))
    residuals = {
        "continuity": _interior_max(continuity),
        "radial_momentum": _interior_max(radial),
        "entropy_transport": _interior_max(convect(S)),
        "angular_momentum_transport": _interior_max(convect(Lam)),
    }

    bernoulli = bernoulli_of(u, rho, p, gamma)
    bernoulli_deviation = float(np.max(np.abs(bernoulli - bg.B0_minus)))

    fp = metrics.fp
    norm = np.sqrt(1.0 + fp * fp)
    normal_velocity = (-fp * u.u_x[:, -1] + u.u_r[:, -1]) / norm
    pressure_jump = float(np.max(np.abs(p[:, -1] - bg.p0)))

    w = compute_stream_h(rho * u.u_x, metrics, bg, method)
    top = w.interface_row
    imbalance = np.abs(top - top[0]) / max(abs(float(top[0])), TINY)

    c_sq = gamma * p / rho
    speed_sq = np.asarray(u.speed_squared())
    margin = float(np.min(c_sq - speed_sq))

    # O = r^2 rho (c^2 - |u|^2 + u_theta^2) against r^2 rho0 (c0^2 - u0^2) / 4
    o_scale = 0.25 * bg.rho0 * (bg.c0**2 - bg.u0**2)
    o_ratio = float(np.min((rho * (c_sq - speed_sq + u.u_theta**2))[interior]) / o_scale)

    wx, wr = metrics.gradient(w.values)
    stream_bernoulli = (bg.B0_minus * R**2 * rho**2
                        - 0.5 * (wx**2 + wr**2 + Lam**2 * rho**2)
                        - R**2 * gamma / (gamma - 1.0) * S * rho ** (gamma + 1.0))

    S_if, L_if = state.interface
    trace = {
        "entropy": float(np.max(np.abs(S[:, -1] - S_if))),
        "angular_momentum": float(np.max(np.abs(Lam[:, -1] - L_if))),
    }
    ode = free_boundary_ode_residual(state.curve, u.u_x, u.u_r)

    return ConservationSection(
        euler_residuals=residuals,
        bernoulli_deviation=bernoulli_deviation,
        interface_pressure_jump=pressure_jump,
        interface_normal_velocity=float(np.max(np.abs(normal_velocity))),
        flux_imbalance=[float(v) for v in imbalance],
        flux_imbalance_max=float(np.max(imbalance)),
        subsonic_margin=margin,
        density_min=float(np.min(rho)),
        o_floor_ratio=o_ratio,
        stream_bernoulli_residual=float(np.max(np.abs(stream_bernoulli))),
        interface_trace=trace,
        free_boundary_ode={"max": ode.max_norm, "l2": ode.l2_norm},
    )


def farfield_report(state: "SolutionState", windows: int = 5,
                    decay_ratio: float = 0.25) -> FarfieldSection:
    """Window statistics along x and the decay flags between first and last window."""
    if windows < 2:
        raise ConfigError(f"diagnostics.windows must be >= 2, got {windows}")
    metrics = state.metrics
    x = metrics.grid.x
    u = state.u
    rho, p = state.rho, state.p
    R = metrics.R
    interior = R > 0.0
    safe_R = np.where(interior, R, 1.0)

    dur_dx, dur_dr = metrics.gradient(u.u_r)
    centrifugal = np.where(interior, rho * u.u_theta**2 / safe_R, 0.0)
    balance = np.where(interior, metrics.ddr(p) - centrifugal, 0.0)
    omega = -R * rho * u.u_r

    edges = np.linspace(0.0, float(x[-1]), windows + 1)
    stats: List[WindowStats] = []
    for a, b in zip(edges[:-1], edges[1:]):
        cols = (x >= a - 1e-12) & (x <= b + 1e-12)
        stats.append(WindowStats(
            x_start=float(a),
            x_end=float(b),
            ur_max=float(np.max(np.abs(u.u_r[cols]))),
            ur_c1=float(np.max(np.abs(u.u_r[cols])) + np.max(np.abs(dur_dx[cols]))
                        + np.max(np.abs(dur_dr[cols]))),
            radial_balance=float(np.max(np.abs(balance[cols]))),
            centrifugal=float(np.max(centrifugal[cols])),
            pressure_deviation=float(np.max(np.abs(p[cols] - state.background.p0))),
            omega_max=float(np.max(np.abs(omega[cols]))),
        ))

    first, last = stats[0], stats[-1]

    def ratio(a: float, b: float) -> float:
        return 0.0 if a <= TINY else b / a

    ratios = {
        "ur_c1": ratio(first.ur_c1, last.ur_c1),
        "radial_balance": ratio(first.radial_balance, last.radial_balance),
        "pressure_deviation": ratio(first.pressure_deviation, last.pressure_deviation),
    }
    flags = {name: value <= decay_ratio for name, value in ratios.items()}
    return FarfieldSection(windows=stats, decay_ratios=ratios, decay_flags=flags)


def run_diagnostics(state: "SolutionState", windows: int = 5, decay_ratio: float = 0.25,
                    flux_gate: float = 1e-7, quadrature: str = "trapezoid"
                    ) -> DiagnosticsReport:
    """Full diagnostic report with pass/fail gates."""
    conservation = invariant_report(state, quadrature)
    farfield = farfield_report(state, windows, decay_ratio)
    omega = compute_omega(state, quadrature)
    gates = {
        "subsonic": conservation.subsonic_margin > 0.0,
        "density_floor": conservation.density_min >= 0.5 * state.background.rho0,
        "o_floor": conservation.o_floor_ratio >= 1.0,
        "bernoulli": conservation.bernoulli_deviation <= BERNOULLI_GATE,
        "flux_balance": conservation.flux_imbalance_max <= flux_gate,
        "omega": omega.disagreement <= omega.tolerance,
    }
    failed = sorted(name for name, ok in gates.items() if not ok)
    if failed:
        logger.warning("diagnostic gates failed: %s", ", ".join(failed))
    return DiagnosticsReport(conservation=conservation, farfield=farfield,
                             omega_disagreement=omega.disagreement,
                             omega_tolerance=omega.tolerance, gates=gates)
