"""
Thermodynamic closure for the inner layer.

Background invariants, the density map H(S, q) obtained by inverting the
Bernoulli relation, and velocity reconstruction from the Helmholtz potentials.
All functions accept scalars or numpy arrays and broadcast.
"""
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..errors import (
    AxisCompatibilityError,
    CavitationError,
    ConfigError,
    SubsonicityError,
    first_violation,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

AXIS_TOLERANCE = 1e-12


@dataclass(frozen=True)
class GasParameters:
    """Adiabatic exponent and the two background layers."""

    gamma: float = 1.4
    p0: float = 1.0
    rho0_minus: float = 1.0
    u0: float = 0.3
    rho0_plus: float = 1.5

    @property
    def c0(self) -> float:
        return float(np.sqrt(self.gamma * self.p0 / self.rho0_minus))

    def validate(self) -> None:
        if not self.gamma > 1.0:
            raise ConfigError(f"gamma must exceed 1, got {self.gamma}")
        for name in ("p0", "rho0_minus", "rho0_plus", "u0"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        if self.u0 >= self.c0:
            raise SubsonicityError(
                f"u0 not subsonic: u0={self.u0} >= c0={self.c0:.6g}", value=self.u0
            )


@dataclass(frozen=True)
class BackgroundState:
    """Piecewise-constant background invariants of both layers."""

    gas: GasParameters
    S0_minus: float
    S0_plus: float
    B0_minus: float
    B0_plus: float
    c0: float
    c0_plus: float

    @property
    def gamma(self) -> float:
        return self.gas.gamma

    @property
    def rho0(self) -> float:
        return self.gas.rho0_minus

    @property
    def u0(self) -> float:
        return self.gas.u0

    @property
    def p0(self) -> float:
        return self.gas.p0

    @property
    def mass_flux(self) -> float:
        """Background axial mass flux density rho0 * u0."""
        return self.gas.rho0_minus * self.gas.u0


@dataclass(frozen=True)
class VelocityTriple:
    """(u_x, u_r, u_theta), scalar or array valued."""

    u_x: ArrayLike
    u_r: ArrayLike
    u_theta: ArrayLike

    def speed_squared(self) -> ArrayLike:
        return self.u_x * self.u_x + self.u_r * self.u_r + self.u_theta * self.u_theta

    def __add__(self, other: "VelocityTriple") -> "VelocityTriple":
        return VelocityTriple(
            self.u_x + other.u_x, self.u_r + other.u_r, self.u_theta + other.u_theta
        )


def derive_background(gas: GasParameters) -> BackgroundState:
    """背景状態の不変量を計算する"""
    gas.validate()
    g = gas.gamma
    background = BackgroundState(
        gas=gas,
        S0_minus=gas.p0 / gas.rho0_minus**g,
        S0_plus=gas.p0 / gas.rho0_plus**g,
        B0_minus=0.5 * gas.u0**2 + g * gas.p0 / ((g - 1.0) * gas.rho0_minus),
        B0_plus=g * gas.p0 / ((g - 1.0) * gas.rho0_plus),
        c0=gas.c0,
        c0_plus=float(np.sqrt(g * gas.p0 / gas.rho0_plus)),
    )
    logger.debug("background state: %s", background)
    return background


def density_H(S: ArrayLike, q: VelocityTriple, B0_minus: float, gamma: float = 1.4,
              *, check_subsonic: bool = True) -> ArrayLike:
    """
    Density from entropy and speed through the Bernoulli relation.

    H(S, q) = [(gamma-1)/(gamma S) * (B0 - |q|^2/2)]^(1/(gamma-1))

    Raises:
        CavitationError: Bernoulli argument or S not positive
        SubsonicityError: |q|^2 >= c^2 at some node (when check_subsonic)
    """
    S_arr = np.asarray(S, dtype=float)
    q_sq = np.asarray(q.speed_squared(), dtype=float)
    energy = B0_minus - 0.5 * q_sq

    bad = ~(energy > 0.0) | ~(S_arr > 0.0)
    if np.any(bad):
        raise CavitationError(
            "Bernoulli argument B0 - |q|^2/2 or entropy not positive",
            location=first_violation(np.atleast_1d(bad)),
            value=float(np.min(energy)),
        )

    rho = ((gamma - 1.0) / (gamma * S_arr) * energy) ** (1.0 / (gamma - 1.0))

    if check_subsonic:
        # c^2 = gamma S H^(gamma-1) = (gamma-1)(B0 - |q|^2/2)
        c_sq = (gamma - 1.0) * energy
        supersonic = q_sq >= c_sq
        if np.any(supersonic):
            raise SubsonicityError(
                "state is not subsonic (|q|^2 >= c^2)",
                location=first_violation(np.atleast_1d(supersonic)),
                value=float(np.max(q_sq - c_sq)),
            )

    if np.ndim(rho) == 0:
        return float(rho)
    return rho


def sound_speed_squared(S: ArrayLike, rho: ArrayLike, gamma: float) -> ArrayLike:
    return gamma * S * np.power(rho, gamma - 1.0)


def density_derivatives(S: ArrayLike, rho: ArrayLike, gamma: float
                        ) -> Tuple[ArrayLike, ArrayLike]:
    """
    Partial derivatives of H at a state with density rho = H(S, q).

    Returns:
        (dH/dS, k) where dH/dq = k * q, k = -H / c^2
    """
    dH_dS = -rho / ((gamma - 1.0) * S)
    k = -rho / sound_speed_squared(S, rho, gamma)
    return dH_dS, k


def pressure_of(S: ArrayLike, rho: ArrayLike, gamma: float) -> ArrayLike:
    return S * np.power(rho, gamma)


def velocity_from_potentials(phi_grad: Tuple[ArrayLike, ArrayLike], psi: ArrayLike,
                             psi_grad: Tuple[ArrayLike, ArrayLike], Lambda: ArrayLike,
                             r: ArrayLike, dr_Lambda: ArrayLike = 0.0) -> VelocityTriple:
    """
    Reconstruct (u_x, u_r, u_theta) from grad(phi), psi and Lambda.

    u_x = d_x phi + (1/r) d_r(r psi), u_r = d_r phi - d_x psi, u_theta = Lambda/r.
    On the axis the 1/r terms take their limits 2 d_r psi and d_r Lambda, which
    requires psi = Lambda = 0 there.
    """
    dphi_dx, dphi_dr = phi_grad
    dpsi_dx, dpsi_dr = psi_grad
    r_arr = np.asarray(r, dtype=float)
    psi_arr = np.asarray(psi, dtype=float)
    lam_arr = np.asarray(Lambda, dtype=float)

    on_axis = r_arr == 0.0
    if np.any(on_axis):
        axis_psi = np.where(on_axis, np.abs(psi_arr), 0.0)
        axis_lam = np.where(on_axis, np.abs(lam_arr), 0.0)
        if np.any(axis_psi > AXIS_TOLERANCE) or np.any(axis_lam > AXIS_TOLERANCE):
            raise AxisCompatibilityError(
                "psi and Lambda must vanish on the axis",
                location=first_violation(np.atleast_1d(
                    (axis_psi > AXIS_TOLERANCE) | (axis_lam > AXIS_TOLERANCE))),
                value=float(max(np.max(axis_psi), np.max(axis_lam))),
            )

    safe_r = np.where(on_axis, 1.0, r_arr)
    u_x = dphi_dx + np.where(on_axis, 2.0 * np.asarray(dpsi_dr),
                             psi_arr / safe_r + dpsi_dr)
    u_r = np.where(on_axis, 0.0, np.asarray(dphi_dr) - dpsi_dx)
    u_theta = np.where(on_axis, dr_Lambda, lam_arr / safe_r)

    if np.ndim(u_x) == 0:
        return VelocityTriple(float(u_x), float(u_r), float(u_theta))
    return VelocityTriple(u_x, u_r, u_theta)


def bernoulli_of(u: VelocityTriple, rho: ArrayLike, p: ArrayLike,
                 gamma: float = 1.4) -> ArrayLike:
    """Bernoulli energy density |u|^2/2 + gamma p / ((gamma-1) rho)."""
    return 0.5 * u.speed_squared() + gamma * p / ((gamma - 1.0) * rho)
