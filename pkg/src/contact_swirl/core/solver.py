"""
Nested fixed-point driver.

inner  : (phi, psi) at frozen boundary and frozen (S, Lambda)
middle : free boundary f at frozen (S, Lambda), remapping the geometry each pass
outer  : transport of (S, Lambda) from the entrance along the current streamlines

Each level records its successive-change history. Non-contraction, stagnation
and the iteration cap raise the level's divergence error; solve_full turns any
failure into a partial report instead of propagating it.
"""
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple, Type

import numpy as np

from ..errors import (
    CavitationError,
    ConfigError,
    ContactSwirlError,
    DivergenceError,
    InnerDivergenceError,
    MiddleDivergenceError,
    OuterDivergenceError,
    WallTimeExceededError,
    first_violation,
)
from ..profiles.base import ENTRANCE_RADIUS, EntranceProfile
from .diagnostics import DiagnosticsReport, run_diagnostics
from .elliptic import (
    LinearizationCoefficients,
    PhiOperator,
    PhiProblem,
    PsiOperator,
    PsiProblem,
    assemble_flux_F,
    assemble_linearization_aii,
    assemble_source_G,
    transversal_velocity,
)
from .free_boundary import (
    FreeBoundaryCurve,
    free_boundary_ode_residual,
    robin_data_B,
    update_free_boundary,
)
from .gas_state import (
    BackgroundState,
    GasParameters,
    VelocityTriple,
    density_H,
    pressure_of,
    velocity_from_potentials,
)
from .geometry import (
    QUADRATURE_METHODS,
    AxialClosure,
    MetricCoefficients,
    ReferenceGrid,
    build_reference_grid,
    metric_coefficients,
)
from .transport import (
    FrozenTransport,
    TransportSample,
    background_transport,
    build_entrance_flux_map,
    build_frozen_transport,
    compute_footpoint_R0,
    compute_stream_h,
    strip_radii,
    swirl_velocity,
    transport_SLambda,
)

logger = logging.getLogger(__name__)

LEVELS = ("inner", "middle", "outer")
LEVEL_ERRORS: Dict[str, Type[DivergenceError]] = {
    "inner": InnerDivergenceError,
    "middle": MiddleDivergenceError,
    "outer": OuterDivergenceError,
}


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, caps and relaxation per level, plus grid and gas."""

    gas: GasParameters = field(default_factory=GasParameters)
    L: float = 10.0
    nx: int = 64
    nr: int = 32
    tol_inner: float = 1e-10
    tol_middle: float = 1e-9
    tol_outer: float = 1e-8
    max_iter_inner: int = 50
    max_iter_middle: int = 50
    max_iter_outer: int = 50
    relax_inner: float = 1.0
    relax_middle: float = 1.0
    relax_outer: float = 1.0
    quadrature: str = "trapezoid"
    stagnation_window: int = 3
    max_wall_time: Optional[float] = None
    windows: int = 5
    decay_ratio: float = 0.25

    def __post_init__(self) -> None:
        for level in LEVELS:
            tol = getattr(self, f"tol_{level}")
            relax = getattr(self, f"relax_{level}")
            cap = getattr(self, f"max_iter_{level}")
            if not tol > 0.0:
                raise ConfigError(f"solver.tol_{level} must be positive, got {tol}")
            if not 0.0 < relax <= 1.0:
                raise ConfigError(f"solver.relax_{level} must lie in (0, 1], got {relax}")
            if cap < 1:
                raise ConfigError(f"solver.max_iter_{level} must be >= 1, got {cap}")
        if self.quadrature not in QUADRATURE_METHODS:
            raise ConfigError(f"solver.quadrature must be one of {QUADRATURE_METHODS}")
        if self.stagnation_window < 1:
            raise ConfigError("solver.stagnation_window must be >= 1")

    def level(self, name: str) -> Tuple[float, int, float]:
        return (getattr(self, f"tol_{name}"), getattr(self, f"max_iter_{name}"),
                getattr(self, f"relax_{name}"))

    @property
    def flux_gate(self) -> float:
        """Relative flux-imbalance bound implied by the middle and outer tolerances."""
        return 10.0 * (self.tol_middle / self.relax_middle
                       + self.tol_outer / self.relax_outer)


@dataclass
class LevelHistory:
    """Successive-change history of one fixed-point level."""

    level: str
    calls: int = 0
    iterations: int = 0
    changes: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    max_ratio: float = 0.0
    converged: bool = False

    def start_call(self) -> None:
        self.calls += 1
        self.changes = []
        self.ratios = []
        self.converged = False

    def record(self, change: float) -> Optional[float]:
        self.iterations += 1
        ratio = None
        if self.changes and self.changes[-1] > 0.0:
            ratio = change / self.changes[-1]
            self.ratios.append(ratio)
            self.max_ratio = max(self.max_ratio, ratio)
        self.changes.append(change)
        return ratio

    def non_contracting(self, window: int) -> bool:
        tail = self.ratios[-window:]
        return len(tail) == window and all(r >= 1.0 for r in tail)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "calls": self.calls,
            "iterations": self.iterations,
            "changes": [float(c) for c in self.changes],
            "ratios": [float(r) for r in self.ratios],
            "max_ratio": float(self.max_ratio),
            "converged": self.converged,
        }


@dataclass(frozen=True, eq=False)
class SolutionState:
    """Converged (or reconstructed) fields on the reference grid."""

    curve: FreeBoundaryCurve
    metrics: MetricCoefficients
    background: BackgroundState
    interface: Tuple[float, float]
    phi: np.ndarray
    psi: np.ndarray
    S: np.ndarray
    Lambda: np.ndarray
    u: VelocityTriple
    rho: np.ndarray
    p: np.ndarray

    @property
    def grid(self) -> ReferenceGrid:
        return self.metrics.grid

    @property
    def phi_full(self) -> np.ndarray:
        return self.phi + self.background.u0 * self.metrics.X

    def check_gates(self) -> None:
        floor = 0.5 * self.background.rho0
        low = ~(self.rho >= floor)
        if np.any(low):
            raise CavitationError(
                f"density below rho0/2 = {floor:.6g}",
                location=first_violation(low),
                value=float(np.nanmin(self.rho)),
            )


def build_solution_state(curve: FreeBoundaryCurve, metrics: MetricCoefficients,
                         background: BackgroundState, interface: Tuple[float, float],
                         phi: np.ndarray, psi: np.ndarray, S: np.ndarray,
                         Lambda: np.ndarray) -> SolutionState:
    """Derive (u, rho, p) from the potentials and transported fields."""
    gx, gr = metrics.gradient(phi, AxialClosure.DIRICHLET)
    u = velocity_from_potentials((background.u0 + gx, gr), psi,
                                 metrics.gradient(psi, AxialClosure.NEUMANN),
                                 Lambda, metrics.R)
    rho = density_H(S, u, background.B0_minus, background.gamma)
    p = pressure_of(S, rho, background.gamma)
    state = SolutionState(curve=curve, metrics=metrics, background=background,
                          interface=interface, phi=phi, psi=psi, S=S, Lambda=Lambda,
                          u=u, rho=rho, p=p)
    state.check_gates()
    return state


@dataclass
class SolveReport:
    """Histories, residuals, gates and diagnostics of one solve."""

    converged: bool
    sigma: float
    profile: Dict[str, Any]
    grid: Dict[str, Any]
    levels: Dict[str, LevelHistory]
    residuals: Dict[str, float]
    gates: Dict[str, bool]
    max_deviation: Dict[str, float]
    diagnostics: Optional[DiagnosticsReport] = None
    error: Optional[Dict[str, Any]] = None
    error_exit: Optional[int] = None
    wall_time: float = 0.0

    @property
    def error_class(self) -> Optional[str]:
        return None if self.error is None else self.error["error_class"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "converged": self.converged,
            "sigma": float(self.sigma),
            "profile": self.profile,
            "grid": self.grid,
            "levels": {name: h.to_dict() for name, h in self.levels.items()},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "gates": dict(self.gates),
            "max_deviation": {k: float(v) for k, v in self.max_deviation.items()},
            "error": self.error,
        }


@dataclass(frozen=True, eq=False)
class GeometryContext:
    """Metrics and factorized operators for one boundary."""

    metrics: MetricCoefficients
    phi_op: PhiOperator
    psi_op: PsiOperator


@dataclass(frozen=True, eq=False)
class InnerResult:
    phi: np.ndarray
    psi: np.ndarray
    history: List[float]


@dataclass(frozen=True, eq=False)
class MiddleResult:
    curve: FreeBoundaryCurve
    geometry: GeometryContext
    phi: np.ndarray
    psi: np.ndarray
    sample: TransportSample
    u: VelocityTriple
    rho: np.ndarray


class ContactSolver:
    """三層の不動点反復ドライバ"""

    def __init__(self, config: SolverConfig, profile: EntranceProfile):
        self.config = config
        self.profile = profile
        self.background = profile.background
        if self.background.gas != config.gas:
            raise ConfigError("profile and solver use different gas parameters")
        self.coeffs: LinearizationCoefficients = assemble_linearization_aii(
            self.background)
        self.grid = build_reference_grid(config.L, config.nx, config.nr)
        self.strip_r = strip_radii(config.nr)
        self.entrance = profile.phi_en(self.grid.eta * ENTRANCE_RADIUS)
        self.entrance[-1] = 0.0
        self.histories = {name: LevelHistory(name) for name in LEVELS}
        self._active: List[str] = []
        self._t0: Optional[float] = None
        self.last_state: Optional[SolutionState] = None

    # Bookkeeping ---------------------------------------------------------

    @contextmanager
    def _level(self, name: str) -> Iterator[LevelHistory]:
        # a level that raises stays on the stack so solve_full can attribute it
        self._active.append(name)
        history = self.histories[name]
        history.start_call()
        yield history
        self._active.pop()

    def _check_wall_time(self, level: str) -> None:
        cap = self.config.max_wall_time
        if cap is None or self._t0 is None:
            return
        elapsed = time.perf_counter() - self._t0
        if elapsed > cap:
            raise WallTimeExceededError(
                f"wall-time cap {cap:.3g}s exceeded during {level} iteration",
                history=self.histories[level].changes, sigma=self.profile.sigma,
            )

    def _diverged(self, level: str, message: str) -> DivergenceError:
        return LEVEL_ERRORS[level](
            f"{level} iteration {message}",
            history=self.histories[level].changes,
            sigma=self.profile.sigma,
        )

    def _after_step(self, level: str, history: LevelHistory) -> None:
        if history.non_contracting(self.config.stagnation_window):
            raise self._diverged(
                level,
                f"not contracting (ratio >= 1 for {self.config.stagnation_window} "
                "consecutive iterations)",
            )
        self._check_wall_time(level)

    def geometry(self, curve: FreeBoundaryCurve) -> GeometryContext:
        metrics = metric_coefficients(curve, self.grid)
        return GeometryContext(metrics=metrics, phi_op=PhiOperator(self.coeffs, metrics),
                               psi_op=PsiOperator(metrics))

    def velocity(self, metrics: MetricCoefficients, phi: np.ndarray, psi: np.ndarray,
                 sample: TransportSample) -> VelocityTriple:
        gx, gr = metrics.gradient(phi, AxialClosure.DIRICHLET)
        t = transversal_velocity(psi, metrics, swirl=sample.swirl)
        return VelocityTriple(self.background.u0 + gx + t.u_x, gr + t.u_r, t.u_theta)

    # Levels -----------------------------------------------------------------

    def solve_inner_phipsi(self, ctx: GeometryContext, frozen: FrozenTransport,
                           initial: Optional[Tuple[np.ndarray, np.ndarray]] = None
                           ) -> InnerResult:
        """Alternate the psi and phi solves at fixed boundary and transport."""
        tol, max_iter, relax = self.config.level("inner")
        metrics = ctx.metrics
        bg = self.background
        sample = frozen.sample(metrics.R)
        S_if, L_if = frozen.interface
        robin = robin_data_B(metrics.f, metrics.fp, S_if, L_if, bg)

        if initial is None:
            phi = np.zeros(self.grid.shape)
            psi = np.zeros(self.grid.shape)
        else:
            phi, psi = initial[0].copy(), initial[1].copy()

        with self._level("inner") as history:
            for k in range(1, max_iter + 1):
                gx, gr = metrics.gradient(phi, AxialClosure.DIRICHLET)
                t_old = transversal_velocity(psi, metrics, swirl=sample.swirl)
                G = assemble_source_G(sample.S, sample.Lambda, sample.dr_S,
                                      sample.dr_Lambda, t_old, (bg.u0 + gx, gr),
                                      R=metrics.R, background=bg)
                psi_new = ctx.psi_op.solve(PsiProblem(source=G, robin=robin.values))
                flux = assemble_flux_F(sample.S, phi, psi_new, sample.Lambda,
                                       metrics=metrics, background=bg, coeffs=self.coeffs,
                                       swirl=sample.swirl)
                phi_new = ctx.phi_op.solve(PhiProblem(flux=flux, entrance=self.entrance))
                if relax != 1.0:
                    phi_new = phi + relax * (phi_new - phi)
                    psi_new = psi + relax * (psi_new - psi)

                change = max(float(np.max(np.abs(phi_new - phi))),
                             float(np.max(np.abs(psi_new - psi)))) / bg.u0
                ratio = history.record(change)
                logger.debug("inner %d: change %.3e ratio %s", k, change,
                             "-" if ratio is None else f"{ratio:.3e}")
                phi, psi = phi_new, psi_new
                if change < tol:
                    history.converged = True
                    break
                self._after_step("inner", history)
            else:
                raise self._diverged("inner",
                                     f"did not converge in {max_iter} iterations")

        return InnerResult(phi=phi, psi=psi, history=list(history.changes))

    def solve_middle_f(self, frozen: FrozenTransport,
                       initial_curve: Optional[FreeBoundaryCurve] = None,
                       initial_fields: Optional[Tuple[np.ndarray, np.ndarray]] = None
                       ) -> MiddleResult:
        """Free-boundary loop at frozen (S, Lambda)."""
        tol, max_iter, relax = self.config.level("middle")
        bg = self.background
        curve = initial_curve if initial_curve is not None else self.grid.flat_curve()
        fields = initial_fields

        with self._level("middle") as history:
            for m in range(1, max_iter + 1):
                curve.check_band()
                ctx = self.geometry(curve)
                inner = self.solve_inner_phipsi(ctx, frozen, fields)
                sample = frozen.sample(ctx.metrics.R)
                u = self.velocity(ctx.metrics, inner.phi, inner.psi, sample)
                rho = density_H(sample.S, u, bg.B0_minus, bg.gamma)
                updated = update_free_boundary(curve, rho * u.u_x, bg, ctx.metrics,
                                               self.config.quadrature)
                if relax != 1.0:
                    updated = FreeBoundaryCurve.anchored(
                        curve.x, curve.values + relax * (updated.values - curve.values))

                change = float(np.max(np.abs(updated.values - curve.values)))
                ratio = history.record(change)
                logger.debug("middle %d: change %.3e ratio %s max|f-1/2| %.3e", m, change,
                             "-" if ratio is None else f"{ratio:.3e}",
                             updated.max_deviation())
                fields = (inner.phi, inner.psi)
                if change < tol:
                    history.converged = True
                    result = MiddleResult(curve=curve, geometry=ctx, phi=inner.phi,
                                          psi=inner.psi, sample=sample, u=u, rho=rho)
                    break
                updated.check_band()
                self._after_step("middle", history)
                curve = updated
            else:
                raise self._diverged("middle", f"did not converge in {max_iter} passes")

        return result

    def solve_outer_W(self) -> SolutionState:
        """Transport loop; returns the converged solution state."""
        tol, max_iter, relax = self.config.level("outer")
        bg = self.background
        flat = metric_coefficients(self.grid.flat_curve(), self.grid)
        frozen = background_transport(self.profile, flat, self.strip_r)
        curve: Optional[FreeBoundaryCurve] = None
        fields: Optional[Tuple[np.ndarray, np.ndarray]] = None

        with self._level("outer") as history:
            for n in range(1, max_iter + 1):
                mid = self.solve_middle_f(frozen, curve, fields)
                metrics = mid.geometry.metrics
                w = compute_stream_h(mid.rho * mid.u.u_x, metrics, bg,
                                     self.config.quadrature)
                flux_map = build_entrance_flux_map(w.entrance_column, metrics.R[0])
                R0 = compute_footpoint_R0(w, flux_map, metrics.R)
                S, Lambda = transport_SLambda(self.profile, R0)
                swirl = swirl_velocity(Lambda, R0, self.profile, metrics.R)
                updated = build_frozen_transport(S, Lambda, swirl, metrics, self.strip_r,
                                                 self.profile.interface_values())
                updated = updated.relaxed(frozen, relax)

                change = updated.change_from(frozen, bg)
                ratio = history.record(change)
                logger.debug("outer %d: change %.3e ratio %s", n, change,
                             "-" if ratio is None else f"{ratio:.3e}")
                curve, fields = mid.curve, (mid.phi, mid.psi)
                if change < tol:
                    history.converged = True
                    state = build_solution_state(mid.curve, metrics, bg,
                                                 self.profile.interface_values(),
                                                 mid.phi, mid.psi, S, Lambda)
                    break
                self._after_step("outer", history)
                frozen = updated
            else:
                raise self._diverged("outer", f"did not converge in {max_iter} passes")

        logger.info("outer loop converged after %d passes (max|f-1/2| = %.3e)",
                    history.iterations, state.curve.max_deviation())
        self.last_state = state
        return state

    # Driver -----------------------------------------------------------------

    def solve_full(self) -> Tuple[Optional[SolutionState], SolveReport]:
        """Run all levels and the diagnostics; failures produce a partial report."""
        self._t0 = time.perf_counter()
        self._active = []
        state: Optional[SolutionState] = None
        diagnostics: Optional[DiagnosticsReport] = None
        error: Optional[ContactSwirlError] = None

        try:
            state = self.solve_outer_W()
            diagnostics = run_diagnostics(state, windows=self.config.windows,
                                          decay_ratio=self.config.decay_ratio,
                                          flux_gate=self.config.flux_gate,
                                          quadrature=self.config.quadrature)
        except DivergenceError as e:
            error = e
        except ContactSwirlError as e:
            error = self._attribute(e)

        wall = time.perf_counter() - self._t0
        report = self._report(state, diagnostics, error, wall)
        if error is None:
            logger.info("solve finished in %.2fs (converged=%s)", wall, report.converged)
        else:
            logger.warning("solve failed after %.2fs: %s", wall, error.message)
        return state, report

    def _attribute(self, error: ContactSwirlError) -> ContactSwirlError:
        """Report a state error raised mid-iteration as divergence of that level."""
        if not self._active:
            return error
        level = self._active[-1]
        wrapped = LEVEL_ERRORS[level](
            f"{level} iterate left the admissible set: {error.message}",
            history=self.histories[level].changes, sigma=self.profile.sigma,
            location=error.location, value=error.value,
        )
        wrapped.context["cause"] = error.error_class
        return wrapped

    def _report(self, state: Optional[SolutionState],
                diagnostics: Optional[DiagnosticsReport],
                error: Optional[ContactSwirlError], wall: float) -> SolveReport:
        residuals: Dict[str, float] = {
            "elliptic": self._last_change("inner"),
            "free_boundary_update": self._last_change("middle"),
            "transport": self._last_change("outer"),
        }
        max_deviation: Dict[str, float] = {}
        gates: Dict[str, bool] = {}
        if state is not None:
            ode = free_boundary_ode_residual(state.curve, state.u.u_x, state.u.u_r)
            residuals["free_boundary_ode"] = ode.max_norm
            max_deviation = {
                "f": state.curve.max_deviation(),
                "u": float(np.max(np.sqrt((state.u.u_x - self.background.u0) ** 2
                                          + state.u.u_r**2 + state.u.u_theta**2))),
            }
        if diagnostics is not None:
            residuals["flux_balance"] = diagnostics.flux_imbalance_max
            residuals["bernoulli"] = diagnostics.bernoulli_deviation
            gates = dict(diagnostics.gates)

        error_dict = None
        if error is not None:
            error_dict = error.to_dict()
            if "cause" in error.context:
                error_dict["cause"] = error.context["cause"]

        converged = (error is None and diagnostics is not None and all(gates.values())
                     and all(self.histories[level].converged for level in LEVELS))
        return SolveReport(
            converged=converged,
            sigma=self.profile.sigma,
            profile=self.profile.describe(),
            grid={"L": self.grid.L, "nx": self.grid.nx, "nr": self.grid.nr},
            levels=self.histories,
            residuals=residuals,
            gates=gates,
            max_deviation=max_deviation,
            diagnostics=diagnostics,
            error=error_dict,
            error_exit=None if error is None else error.exit_code,
            wall_time=wall,
        )

    def _last_change(self, level: str) -> float:
        changes = self.histories[level].changes
        return float(changes[-1]) if changes else float("nan")


def solve_full(config: SolverConfig, profile: EntranceProfile
               ) -> Tuple[Optional[SolutionState], SolveReport]:
    return ContactSolver(config, profile).solve_full()
