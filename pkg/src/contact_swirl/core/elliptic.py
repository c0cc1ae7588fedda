"""
The two linear elliptic problems of one inner iteration.

phi problem:  a11 d_xx p + a22 (d_rr + (1/r) d_r) p = div F,  p = phi - u0 x
psi problem: -(d_xx + d_rr + (1/r) d_r - 1/r^2) psi = G

Both are discretized with second-order central differences on the reference
rectangle, pulled back through the boundary-fitted map. Each operator is
assembled and LU-factorized once per geometry; successive right-hand sides
reuse the factorization.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss
from scipy.sparse.linalg import splu

from ..errors import (
    AxisCompatibilityError,
    DegeneracyError,
    EllipticityError,
    LinearSolverError,
    SupportConditionError,
    first_violation,
)
from .gas_state import (
    BackgroundState,
    GasParameters,
    VelocityTriple,
    density_derivatives,
    density_H,
    derive_background,
)
from .geometry import AxialClosure, AxisKind, MeridionalField, MetricCoefficients

logger = logging.getLogger(__name__)

GAUSS_ORDER = 4
RESIDUAL_TOLERANCE = 1e-11
MIN_A11_RATIO = 1e-3
ENTRANCE_CONTINUITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class LinearizationCoefficients:
    """Diagonal coefficients of the flux linearization at the background."""

    a11: float
    a22: float
    a33: float

    @property
    def nu(self) -> float:
        """Largest nu <= 1/10 with nu < a_ii < 1/nu."""
        values = (self.a11, self.a22, self.a33)
        return min(0.1, 0.5 * min(values), 0.5 / max(values))


def assemble_linearization_aii(
        gas: Union[GasParameters, BackgroundState]) -> LinearizationCoefficients:
    background = gas if isinstance(gas, BackgroundState) else derive_background(gas)
    rho0, u0, c0 = background.rho0, background.u0, background.c0
    a11 = rho0 * (1.0 - u0 * u0 / (c0 * c0))
    if a11 <= MIN_A11_RATIO * rho0:
        raise EllipticityError(
            f"linearized operator degenerates: a11 = {a11:.3e} "
            f"(u0 = {u0}, c0 = {c0:.6g})",
            value=a11,
        )
    return LinearizationCoefficients(a11=a11, a22=rho0, a33=rho0)


@dataclass(frozen=True, eq=False)
class FluxField:
    """Meridional components (F_x, F_r) of the nonlinear remainder flux."""

    x: np.ndarray
    r: np.ndarray


@dataclass(frozen=True, eq=False)
class PhiProblem:
    flux: FluxField
    entrance: np.ndarray

    def __post_init__(self) -> None:
        if not (np.all(np.isfinite(self.flux.x)) and np.all(np.isfinite(self.flux.r))):
            bad = ~np.isfinite(self.flux.x) | ~np.isfinite(self.flux.r)
            raise LinearSolverError("non-finite flux field",
                                    location=first_violation(bad))
        if abs(float(self.entrance[-1])) > ENTRANCE_CONTINUITY_TOLERANCE:
            raise SupportConditionError(
                "entrance potential must vanish at r = 1/2",
                location=(0, len(self.entrance) - 1),
                value=float(self.entrance[-1]),
            )


@dataclass(frozen=True, eq=False)
class PsiProblem:
    source: np.ndarray
    robin: np.ndarray

    def __post_init__(self) -> None:
        axis = np.abs(self.source[:, 0])
        if np.any(axis != 0.0):
            raise AxisCompatibilityError(
                "psi source must vanish on the axis",
                location=(int(np.argmax(axis)), 0),
                value=float(np.max(axis)),
            )

    @staticmethod
    def robin_coefficient(metrics: MetricCoefficients) -> np.ndarray:
        """mu(x) = -1 / (f sqrt(1 + f'^2)); strictly negative."""
        return -1.0 / (metrics.f * np.sqrt(1.0 + metrics.fp**2))


# Sparse assembly ---------------------------------------------------------------

class _StencilAssembler:
    """Collects COO triplets for a node-indexed (nx+1) x (nr+1) operator."""

    def __init__(self, nx: int, nr: int):
        self.nx = nx
        self.nr = nr
        self.size = (nx + 1) * (nr + 1)
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []

    def index(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return i * (self.nr + 1) + j

    def reflect_i(self, i: np.ndarray) -> np.ndarray:
        """Even ghost closure in xi at both ends."""
        i = np.where(i < 0, -i, i)
        return np.where(i > self.nx, 2 * self.nx - i, i)

    def add(self, i: np.ndarray, j: np.ndarray, di: int, dj: int,
            coeff: Union[float, np.ndarray], reflect: bool = False) -> None:
        ci = i + di
        if reflect:
            ci = self.reflect_i(ci)
        coeff = np.broadcast_to(np.asarray(coeff, dtype=float), i.shape)
        self._rows.append(self.index(i, j).ravel())
        self._cols.append(self.index(ci, j + dj).ravel())
        self._vals.append(coeff.ravel())

    def identity(self, i: np.ndarray, j: np.ndarray) -> None:
        self.add(i, j, 0, 0, 1.0)

    def matrix(self) -> sp.csc_matrix:
        A = sp.coo_matrix(
            (np.concatenate(self._vals),
             (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=(self.size, self.size),
        )
        return A.tocsc()


def _node_block(i_range: range, j_range: range) -> Tuple[np.ndarray, np.ndarray]:
    I, J = np.meshgrid(np.array(i_range), np.array(j_range), indexing="ij")
    return I, J


def _add_mapped_second_order(asm: _StencilAssembler, metrics: MetricCoefficients,
                             I: np.ndarray, J: np.ndarray, axial: float, radial: float,
                             reflect: bool, sign: float = 1.0) -> None:
    """
    axial * d_xx + radial * (d_rr + (1/r) d_r) at nodes with eta > 0.

    d_xx u = u_xixi/L^2 - 2 eta g u_xieta / L + eta^2 g^2 u_etaeta
             + eta (2 g^2 - f''/f) u_eta,   g = f'/f
    """
    grid = metrics.grid
    L, hxi, heta = grid.L, grid.h_xi, grid.h_eta
    f = metrics.f[I]
    g = metrics.fp[I] / f
    fpp = metrics.fpp[I]
    eta = grid.eta[J]

    c_xixi = sign * axial / (L * L)
    c_xieta = -2.0 * sign * axial * eta * g / L
    c_etaeta = sign * (axial * eta**2 * g**2 + radial / f**2)
    c_eta = sign * (axial * eta * (2.0 * g**2 - fpp / f) + radial / (eta * f**2))

    asm.add(I, J, 1, 0, c_xixi / hxi**2, reflect)
    asm.add(I, J, -1, 0, c_xixi / hxi**2, reflect)
    asm.add(I, J, 0, 0, -2.0 * c_xixi / hxi**2 - 2.0 * c_etaeta / heta**2)
    asm.add(I, J, 0, 1, c_etaeta / heta**2 + c_eta / (2.0 * heta))
    asm.add(I, J, 0, -1, c_etaeta / heta**2 - c_eta / (2.0 * heta))
    mixed = c_xieta / (4.0 * hxi * heta)
    asm.add(I, J, 1, 1, mixed, reflect)
    asm.add(I, J, -1, -1, mixed, reflect)
    asm.add(I, J, 1, -1, -mixed, reflect)
    asm.add(I, J, -1, 1, -mixed, reflect)


class _FactorizedOperator:
    """Sparse matrix with a cached LU factorization."""

    label = "operator"

    def __init__(self, matrix: sp.csc_matrix):
        self.matrix = matrix
        self._norm = float(abs(matrix).sum(axis=1).max())
        try:
            self._lu = splu(matrix)
        except RuntimeError as e:
            raise LinearSolverError(f"{self.label}: singular assembly ({e})") from e

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        x = self._lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise LinearSolverError(f"{self.label}: non-finite solution")
        residual = float(np.max(np.abs(self.matrix @ x - rhs))) if rhs.size else 0.0
        scale = self._norm * float(np.max(np.abs(x))) + float(np.max(np.abs(rhs)))
        if residual > RESIDUAL_TOLERANCE * max(scale, np.finfo(float).tiny):
            raise LinearSolverError(
                f"{self.label}: residual {residual:.3e} above tolerance", value=residual
            )
        return x


class PhiOperator(_FactorizedOperator):
    """Frozen-coefficient operator for the potential correction."""

    label = "phi operator"

    def __init__(self, coeffs: LinearizationCoefficients, metrics: MetricCoefficients):
        self.metrics = metrics
        self.coeffs = coeffs
        grid = metrics.grid
        nx, nr = grid.nx, grid.nr
        asm = _StencilAssembler(nx, nr)

        I, J = _node_block(range(1, nx), range(1, nr))
        _add_mapped_second_order(asm, metrics, I, J, coeffs.a11, coeffs.a22,
                                 reflect=False)

        # axis row: (1/r) d_r -> d_r^2, even ghost u_{-1} = u_1
        I, J = _node_block(range(1, nx), range(0, 1))
        f = metrics.f[I]
        c_xixi = coeffs.a11 / (grid.L * grid.h_xi) ** 2
        c_axis = 4.0 * coeffs.a22 / (grid.h_eta * f) ** 2
        asm.add(I, J, 1, 0, c_xixi)
        asm.add(I, J, -1, 0, c_xixi)
        asm.add(I, J, 0, 0, -2.0 * c_xixi - c_axis)
        asm.add(I, J, 0, 1, c_axis)

        for block in (_node_block(range(0, 1), range(0, nr + 1)),
                      _node_block(range(nx, nx + 1), range(0, nr + 1)),
                      _node_block(range(1, nx), range(nr, nr + 1))):
            asm.identity(*block)

        super().__init__(asm.matrix())

    def solve(self, problem: PhiProblem) -> np.ndarray:
        grid = self.metrics.grid
        rhs = flux_divergence(problem.flux, self.metrics)
        rhs[0, :] = problem.entrance
        rhs[-1, :] = 0.0
        rhs[:, -1] = 0.0
        rhs[0, -1] = problem.entrance[-1]
        u = self._solve(rhs.ravel()).reshape(grid.shape)
        u[0, :] = problem.entrance
        u[-1, :] = 0.0
        u[1:, -1] = 0.0
        return u


class PsiOperator(_FactorizedOperator):
    """Axis-singular operator for the angular stream component."""

    label = "psi operator"

    def __init__(self, metrics: MetricCoefficients):
        self.metrics = metrics
        grid = metrics.grid
        nx, nr = grid.nx, grid.nr
        asm = _StencilAssembler(nx, nr)

        I, J = _node_block(range(0, nx + 1), range(1, nr))
        _add_mapped_second_order(asm, metrics, I, J, 1.0, 1.0, reflect=True, sign=-1.0)
        r = grid.eta[J] * metrics.f[I]
        asm.add(I, J, 0, 0, 1.0 / r**2)

        # Robin row on eta = 1, multiplied through by sqrt(1 + f'^2)
        I, J = _node_block(range(0, nx + 1), range(nr, nr + 1))
        f = metrics.f[I]
        fp = metrics.fp[I]
        c_xi = -fp / (grid.L * 2.0 * grid.h_xi)
        c_eta = (1.0 + fp**2) / f / (2.0 * grid.h_eta)
        asm.add(I, J, 1, 0, c_xi, reflect=True)
        asm.add(I, J, -1, 0, -c_xi, reflect=True)
        asm.add(I, J, 0, 0, 3.0 * c_eta + 1.0 / f)
        asm.add(I, J, 0, -1, -4.0 * c_eta)
        asm.add(I, J, 0, -2, c_eta)

        asm.identity(*_node_block(range(0, nx + 1), range(0, 1)))
        super().__init__(asm.matrix())

    def solve(self, problem: PsiProblem) -> np.ndarray:
        grid = self.metrics.grid
        rhs = problem.source.copy()
        rhs[:, 0] = 0.0
        rhs[:, -1] = problem.robin * np.sqrt(1.0 + self.metrics.fp**2)
        u = self._solve(rhs.ravel()).reshape(grid.shape)
        u[:, 0] = 0.0
        return u


def build_phi_operator(coeffs: LinearizationCoefficients,
                       metrics: MetricCoefficients) -> PhiOperator:
    return PhiOperator(coeffs, metrics)


def build_psi_operator(metrics: MetricCoefficients) -> PsiOperator:
    return PsiOperator(metrics)


def solve_phi(problem: PhiProblem, coeffs: LinearizationCoefficients,
              metrics: MetricCoefficients,
              operator: Optional[PhiOperator] = None) -> MeridionalField:
    op = operator if operator is not None else PhiOperator(coeffs, metrics)
    return MeridionalField(op.solve(problem), AxisKind.EVEN)


def solve_psi(problem: PsiProblem, metrics: MetricCoefficients,
              operator: Optional[PsiOperator] = None) -> MeridionalField:
    op = operator if operator is not None else PsiOperator(metrics)
    return MeridionalField(op.solve(problem), AxisKind.VANISHES)


# Right-hand sides -------------------------------------------------------------

def flux_divergence(flux: FluxField, metrics: MetricCoefficients) -> np.ndarray:
    """div F = d_x F_x + (1/r) d_r (r F_r); on the axis the last term is 2 d_r F_r."""
    dFr = metrics.ddr(flux.r)
    div = metrics.ddx(flux.x) + dFr
    R = metrics.R
    interior = R > 0.0
    div[interior] += flux.r[interior] / R[interior]
    div[:, 0] += dFr[:, 0]
    return div


def transversal_velocity(psi: np.ndarray, metrics: MetricCoefficients,
                         Lambda: Optional[np.ndarray] = None,
                         swirl: Optional[np.ndarray] = None) -> VelocityTriple:
    """
    Curl part t = (d_r psi + psi/r, -d_x psi, Lambda/r).

    Axis values use 2 d_r psi and zero swirl.
    """
    dpsi_dx, dpsi_dr = metrics.gradient(psi, AxialClosure.NEUMANN)
    R = metrics.R
    safe_R = np.where(R > 0.0, R, 1.0)
    on_axis = R == 0.0
    t_x = np.where(on_axis, 2.0 * dpsi_dr, psi / safe_R + dpsi_dr)
    t_r = np.where(on_axis, 0.0, -dpsi_dx)
    if swirl is not None:
        t_theta = np.where(on_axis, 0.0, swirl)
    elif Lambda is not None:
        t_theta = np.where(on_axis, 0.0, Lambda / safe_R)
    else:
        t_theta = np.zeros_like(psi)
    return VelocityTriple(t_x, t_r, t_theta)


def assemble_flux_F(S: np.ndarray, phi_correction: np.ndarray, psi: np.ndarray,
                    Lambda: Optional[np.ndarray], *, metrics: MetricCoefficients,
                    background: BackgroundState, coeffs: LinearizationCoefficients,
                    swirl: Optional[np.ndarray] = None) -> FluxField:
    """
    Nonlinear remainder flux of the continuity equation.

    F_i = -H(V0+Q) v_i - int_0^1 D_(S,v) A_i(V0+tQ).(xi, v) dt
          - s_hat . int_0^1 [D_s A_i(V0+tQ) - D_s A_i(V0)] dt

    with A_i = H(S, s + v) s_i, Q = (S - S0, grad(phi - phi0), t). The t-integrals
    use Gauss-Legendre quadrature.
    """
    gamma = background.gamma
    B0 = background.B0_minus
    u0 = background.u0

    xi = S - background.S0_minus
    sx, sr = metrics.gradient(phi_correction, AxialClosure.DIRICHLET)
    v = transversal_velocity(psi, metrics, Lambda=Lambda, swirl=swirl)

    nodes, weights = leggauss(GAUSS_ORDER)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights

    int_x = np.zeros_like(sx)
    int_r = np.zeros_like(sx)
    for t, w in zip(nodes, weights):
        S_t = background.S0_minus + t * xi
        s_x = u0 + t * sx
        s_r = t * sr
        q = VelocityTriple(s_x + t * v.u_x, s_r + t * v.u_r, t * v.u_theta)
        H_t = density_H(S_t, q, B0, gamma)
        dH_dS, k = density_derivatives(S_t, H_t, gamma)
        dq_v = k * (q.u_x * v.u_x + q.u_r * v.u_r + q.u_theta * v.u_theta)
        dq_s = k * (q.u_x * sx + q.u_r * sr)
        common = dH_dS * xi + dq_v + dq_s
        int_x += w * (s_x * common + H_t * sx)
        int_r += w * (s_r * common + H_t * sr)

    q_full = VelocityTriple(u0 + sx + v.u_x, sr + v.u_r, v.u_theta)
    H_full = density_H(S, q_full, B0, gamma)
    F_x = -H_full * v.u_x - (int_x - coeffs.a11 * sx)
    F_r = -H_full * v.u_r - (int_r - coeffs.a22 * sr)
    F_r[:, 0] = 0.0
    return FluxField(x=F_x, r=F_r)


def assemble_source_G(S: np.ndarray, Lambda: np.ndarray, dr_S: np.ndarray,
                      dr_Lambda: np.ndarray, t_part: VelocityTriple,
                      grad_phi: Tuple[np.ndarray, np.ndarray], *, R: np.ndarray,
                      background: BackgroundState) -> np.ndarray:
    """
    G = [H^(gamma-1)/(gamma-1) d_r S + (Lambda/r^2) d_r Lambda] / u_x, zero on the axis.

    grad_phi is the full potential gradient (including the background u0).
    """
    gamma = background.gamma
    q = VelocityTriple(grad_phi[0] + t_part.u_x, grad_phi[1] + t_part.u_r,
                       t_part.u_theta)
    low = ~(q.u_x >= 0.5 * background.u0)
    if np.any(low):
        raise DegeneracyError(
            "axial velocity below u0/2",
            location=first_violation(low),
            value=float(np.nanmin(q.u_x)),
        )
    H = density_H(S, q, background.B0_minus, gamma)
    interior = R > 0.0
    safe_R = np.where(interior, R, 1.0)
    numerator = (np.power(H, gamma - 1.0) / (gamma - 1.0) * dr_S
                 + Lambda * dr_Lambda / safe_R**2)
    return np.where(interior, numerator / q.u_x, 0.0)
