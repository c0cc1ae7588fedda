"""
Headless property checks run by the ``verify`` command.

Each check builds its own small problem and returns a CheckResult; nothing
here reads or writes files.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ..errors import ContactSwirlError
from ..profiles import create_profile
from .diagnostics import compute_omega
from .elliptic import PsiOperator, PsiProblem
from .gas_state import (
    GasParameters,
    VelocityTriple,
    bernoulli_of,
    density_H,
    derive_background,
    pressure_of,
)
from .geometry import build_reference_grid, metric_coefficients
from .solver import ContactSolver, SolverConfig
from .transport import (
    extension_moments,
    grid_field_sampler,
    grid_velocity_sampler,
    trace_streamline_oracle,
)

logger = logging.getLogger(__name__)

MOMENT_TOLERANCE = 1e-12
ROUND_TRIP_TOLERANCE = 1e-13
ORACLE_TOLERANCE = 1e-6
BACKGROUND_TOLERANCE = 1e-10
TRANSPORT_LINES = 20
TRANSPORT_TOLERANCE = 1e-5
TRANSPORT_REFERENCE_NX = 128
TRANSPORT_RATIO_MIN = 3.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_extension_moments() -> CheckResult:
    moments = extension_moments()
    err = float(np.max(np.abs(moments - 1.0)))
    return CheckResult("extension_moments", err <= MOMENT_TOLERANCE,
                       f"max|sum c_i (-1/i)^m - 1| = {err:.3e}")


def check_density_round_trip(gas: GasParameters) -> CheckResult:
    bg = derive_background(gas)
    u = VelocityTriple(bg.u0, 0.0, 0.0)
    rho = density_H(bg.S0_minus, u, bg.B0_minus, bg.gamma)
    p = pressure_of(bg.S0_minus, rho, bg.gamma)
    errors = (abs(rho - bg.rho0) / bg.rho0, abs(p - bg.p0) / bg.p0,
              abs(bernoulli_of(u, rho, p, bg.gamma) - bg.B0_minus) / bg.B0_minus)
    err = float(max(errors))
    return CheckResult("density_round_trip", err <= ROUND_TRIP_TOLERANCE,
                       f"max relative error {err:.3e}")


def radial_ode_oracle(source: np.ndarray, robin: float, f: float) -> np.ndarray:
    """
    1D finite-difference solve of -(psi'' + psi'/r - psi/r^2) = g on [0, f],
    psi(0) = 0, psi'(f) + psi(f)/f = robin.
    """
    n = source.size - 1
    h = f / n
    r = np.linspace(0.0, f, n + 1)
    A = sp.lil_matrix((n + 1, n + 1))
    b = np.zeros(n + 1)
    A[0, 0] = 1.0
    for j in range(1, n):
        A[j, j - 1] = -1.0 / h**2 + 1.0 / (2.0 * h * r[j])
        A[j, j] = 2.0 / h**2 + 1.0 / r[j] ** 2
        A[j, j + 1] = -1.0 / h**2 - 1.0 / (2.0 * h * r[j])
        b[j] = source[j]
    A[n, n] = 3.0 / (2.0 * h) + 1.0 / f
    A[n, n - 1] = -4.0 / (2.0 * h)
    A[n, n - 2] = 1.0 / (2.0 * h)
    b[n] = robin
    return spsolve(A.tocsc(), b)


def check_radial_ode_oracle(nr: int = 32) -> CheckResult:
    """x-independent psi problem against the 1D radial solve (psi* = r^3)."""
    grid = build_reference_grid(1.0, 16, nr)
    metrics = metric_coefficients(grid.flat_curve(), grid)
    source = -8.0 * metrics.R
    robin = np.ones(grid.nx + 1)
    psi = PsiOperator(metrics).solve(PsiProblem(source=source, robin=robin))
    oracle = radial_ode_oracle(source[0], 1.0, 0.5)
    err = float(np.max(np.abs(psi - oracle[None, :])))
    exact = float(np.max(np.abs(oracle - metrics.R[0] ** 3)))
    return CheckResult("radial_ode_oracle", err <= ORACLE_TOLERANCE,
                       f"2D vs radial {err:.3e}; radial vs r^3 {exact:.3e}")


def check_background_exactness(gas: GasParameters, L: float = 4.0, nx: int = 16,
                               nr: int = 16) -> CheckResult:
    bg = derive_background(gas)
    profile = create_profile("bump", bg, scale=0.0)
    state, report = ContactSolver(SolverConfig(gas=gas, L=L, nx=nx, nr=nr),
                                  profile).solve_full()
    if state is None or not report.converged:
        return CheckResult("background_exactness", False,
                           f"solve failed: {report.error_class or 'gates'}")
    dev = max(report.max_deviation.values())
    return CheckResult("background_exactness", dev <= BACKGROUND_TOLERANCE,
                       f"max deviation {dev:.3e}")


def transport_oracle_error(gas: GasParameters, L: float = 4.0, nx: int = 32,
                           nr: int = 16, scale: float = 1e-3,
                           n_lines: int = TRANSPORT_LINES) -> float:
    """Max |S - S_en(foot)| and |Lambda - Lambda_en(foot)| along RK4 streamlines."""
    bg = derive_background(gas)
    profile = create_profile("bump", bg, scale=scale)
    state, report = ContactSolver(SolverConfig(gas=gas, L=L, nx=nx, nr=nr),
                                  profile).solve_full()
    if state is None:
        raise ContactSwirlError(f"transport oracle solve failed: {report.error_class}")

    velocity = grid_velocity_sampler(state.u.u_x, state.u.u_r, state.metrics)
    sample_S = grid_field_sampler(state.S, state.metrics)
    sample_L = grid_field_sampler(state.Lambda, state.metrics)

    worst = 0.0
    for start in np.linspace(0.05, 0.4, n_lines):
        line = trace_streamline_oracle(velocity, float(start), L, n_steps=4 * nx,
                                       boundary=state.curve)
        err_S = np.max(np.abs(sample_S(line.x, line.r) - profile.S_en(start)))
        err_L = np.max(np.abs(sample_L(line.x, line.r) - profile.Lambda_en(start)))
        worst = max(worst, float(err_S), float(err_L))
    logger.debug("transport oracle %dx%d: %.3e", nx, nr, worst)
    return worst


def check_transport_oracle(gas: GasParameters, L: float = 4.0, nx: int = 32,
                           nr: int = 16, scale: float = 1e-3,
                           n_lines: int = TRANSPORT_LINES) -> CheckResult:
    """
    Streamline constancy on (nx, nr) and on the doubled grid.

    Passes when the error falls by TRANSPORT_RATIO_MIN or more and the fine-grid
    error is below TRANSPORT_TOLERANCE scaled by h^2 from nx = TRANSPORT_REFERENCE_NX.
    """
    coarse = transport_oracle_error(gas, L, nx, nr, scale, n_lines)
    fine = transport_oracle_error(gas, L, 2 * nx, 2 * nr, scale, n_lines)
    ratio = coarse / max(fine, 1e-300)
    bound = TRANSPORT_TOLERANCE * (TRANSPORT_REFERENCE_NX / (2 * nx)) ** 2
    passed = ratio >= TRANSPORT_RATIO_MIN and fine <= bound
    return CheckResult("transport_oracle", passed,
                       f"{n_lines} lines: {coarse:.3e} -> {fine:.3e} "
                       f"(ratio {ratio:.2f}, bound {bound:.1e})")


def check_omega_consistency(gas: GasParameters, L: float = 4.0, nx: int = 32,
                            nr: int = 16, scale: float = 1e-3) -> CheckResult:
    """d_x h against -r rho u_r on a solved state; raises on disagreement."""
    bg = derive_background(gas)
    profile = create_profile("bump", bg, scale=scale)
    state, report = ContactSolver(SolverConfig(gas=gas, L=L, nx=nx, nr=nr),
                                  profile).solve_full()
    if state is None:
        return CheckResult("omega_consistency", False,
                           f"solve failed: {report.error_class}")
    omega = compute_omega(state, strict=True)
    return CheckResult("omega_consistency", True,
                       f"disagreement {omega.disagreement:.3e} "
                       f"(tolerance {omega.tolerance:.3e})")


def run_property_suite(gas: Optional[GasParameters] = None) -> List[CheckResult]:
    gas = gas or GasParameters()
    checks: List[Callable[[], CheckResult]] = [
        check_extension_moments,
        lambda: check_density_round_trip(gas),
        check_radial_ode_oracle,
        lambda: check_background_exactness(gas),
        lambda: check_transport_oracle(gas),
        lambda: check_omega_consistency(gas),
    ]
    results = []
    for check in checks:
        try:
            result = check()
        except ContactSwirlError as e:
            name = getattr(check, "__name__", "check")
            result = CheckResult(name, False, f"{e.error_class}: {e.message}")
        logger.info("%s: %s (%s)", result.name, "pass" if result.passed else "FAIL",
                    result.detail)
        results.append(result)
    return results
