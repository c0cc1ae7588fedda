"""
Cut-off cylinder geometry on a fixed reference rectangle.

The inner region {0 < x < L, 0 <= r < f(x)} is mapped to the unit square by
(xi, eta) = (x/L, r/f(x)). All grid functions live on the collocated node set
of the square; derivatives in (x, r) follow from the chain rule

    d_x = (1/L) d_xi - (eta f'/f) d_eta,    d_r = (1/f) d_eta.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, trapezoid

from ..errors import AxisCompatibilityError, ConfigError, GeometryError, first_violation
from .free_boundary import BAND_MAX, BAND_MIN, FreeBoundaryCurve

logger = logging.getLogger(__name__)

MIN_CELLS = 16
QUADRATURE_METHODS = ("trapezoid", "simpson")


class AxisKind(str, Enum):
    VANISHES = "vanishes-at-axis"
    EVEN = "even-at-axis"


class AxialClosure(str, Enum):
    """How d_xi is closed on the entrance and exit columns."""

    ONE_SIDED = "one-sided"
    # central difference of d_xi on the next column equals the compact second difference
    DIRICHLET = "dirichlet"
    # even ghost column, d_xi = 0
    NEUMANN = "neumann"


@dataclass(frozen=True, eq=False)
class MeridionalField:
    """Grid function on the reference nodes, shape (nx+1, nr+1)."""

    values: np.ndarray
    axis_kind: AxisKind = AxisKind.EVEN

    def __post_init__(self) -> None:
        if self.axis_kind is AxisKind.VANISHES:
            axis = np.abs(self.values[:, 0])
            if np.any(axis != 0.0):
                raise AxisCompatibilityError(
                    "field flagged vanishes-at-axis is nonzero on the axis row",
                    location=(int(np.argmax(axis)), 0),
                    value=float(np.max(axis)),
                )


@dataclass(frozen=True, eq=False)
class ReferenceGrid:
    """Uniform node set on [0,1] x [0,1] with physical length L."""

    L: float
    nx: int
    nr: int
    xi: np.ndarray = field(init=False)
    eta: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi", np.linspace(0.0, 1.0, self.nx + 1))
        object.__setattr__(self, "eta", np.linspace(0.0, 1.0, self.nr + 1))

    @property
    def h_xi(self) -> float:
        return 1.0 / self.nx

    @property
    def h_eta(self) -> float:
        return 1.0 / self.nr

    @property
    def h_x(self) -> float:
        return self.L / self.nx

    @property
    def x(self) -> np.ndarray:
        return self.L * self.xi

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx + 1, self.nr + 1)

    def flat_curve(self) -> FreeBoundaryCurve:
        return FreeBoundaryCurve.flat(self.x)

    def physical_image(self, curve: FreeBoundaryCurve) -> Tuple[np.ndarray, np.ndarray]:
        """Physical coordinates (X, R) of every node for the boundary f."""
        X = np.broadcast_to(self.x[:, None], self.shape).copy()
        R = np.outer(curve.values, self.eta)
        return X, R


def build_reference_grid(L: float, nx: int, nr: int) -> ReferenceGrid:
    if not L > 0.0:
        raise ConfigError(f"grid.L must be positive, got {L}")
    if nx < MIN_CELLS or nr < MIN_CELLS:
        raise ConfigError(
            f"grid too coarse: nx={nx}, nr={nr} (minimum {MIN_CELLS} cells each)"
        )
    return ReferenceGrid(L=float(L), nx=int(nx), nr=int(nr))


@dataclass(frozen=True, eq=False)
class MetricCoefficients:
    """Chain-rule coefficients and physical node positions for one boundary."""

    grid: ReferenceGrid
    curve: FreeBoundaryCurve
    X: np.ndarray
    R: np.ndarray
    ETA: np.ndarray
    cross: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return self.curve.values

    @property
    def fp(self) -> np.ndarray:
        return self.curve.slope

    @property
    def fpp(self) -> np.ndarray:
        return self.curve.curvature

    @property
    def shape(self) -> Tuple[int, int]:
        return self.grid.shape

    @property
    def jacobian(self) -> np.ndarray:
        """r * f, the area weight of r dr dx in (eta, x)."""
        return self.R * self.f[:, None]

    def d_xi(self, u: np.ndarray,
             ends: AxialClosure = AxialClosure.ONE_SIDED) -> np.ndarray:
        h = self.grid.h_xi
        d = np.gradient(u, h, axis=0, edge_order=2)
        if ends is AxialClosure.DIRICHLET:
            d[0] = (-4.0 * u[0] + 7.0 * u[1] - 4.0 * u[2] + u[3]) / (2.0 * h)
            d[-1] = (4.0 * u[-1] - 7.0 * u[-2] + 4.0 * u[-3] - u[-4]) / (2.0 * h)
        elif ends is AxialClosure.NEUMANN:
            d[0] = 0.0
            d[-1] = 0.0
        return d

    def d_eta(self, u: np.ndarray) -> np.ndarray:
        return np.gradient(u, self.grid.h_eta, axis=1, edge_order=2)

    def ddx(self, u: np.ndarray) -> np.ndarray:
        return self.d_xi(u) / self.grid.L + self.cross * self.d_eta(u)

    def ddr(self, u: np.ndarray) -> np.ndarray:
        return self.d_eta(u) / self.f[:, None]

    def gradient(self, u: np.ndarray, ends: AxialClosure = AxialClosure.ONE_SIDED
                 ) -> Tuple[np.ndarray, np.ndarray]:
        """
        (d_x u, d_r u). Pass the closure of the elliptic problem u solves so the
        divergence of the result on the first interior column matches its stencil.
        """
        d_eta = self.d_eta(u)
        return (self.d_xi(u, ends) / self.grid.L + self.cross * d_eta,
                d_eta / self.f[:, None])

    def radial_cumulative(self, integrand: np.ndarray,
                          method: str = "trapezoid") -> np.ndarray:
        """Columnwise integral from the axis to every node, in physical r."""
        if method == "trapezoid":
            acc = cumulative_trapezoid(integrand, dx=self.grid.h_eta, axis=1, initial=0)
        elif method == "simpson":
            acc = cumulative_simpson(integrand, dx=self.grid.h_eta, axis=1, initial=0)
        else:
            raise ConfigError(f"unknown quadrature '{method}' (use {QUADRATURE_METHODS})")
        return acc * self.f[:, None]

    def integrate(self, values: np.ndarray) -> float:
        """Meridional integral of values * r dr dx over the inner region."""
        inner = trapezoid(values * self.R, dx=self.grid.h_eta, axis=1) * self.f
        return float(trapezoid(inner, dx=self.grid.h_x))


def metric_coefficients(curve: FreeBoundaryCurve, grid: ReferenceGrid
                        ) -> MetricCoefficients:
    if curve.values.shape != (grid.nx + 1,):
        raise GeometryError(
            f"boundary has {curve.values.shape[0]} samples, grid needs {grid.nx + 1}"
        )
    low = curve.values < BAND_MIN
    if np.any(low):
        raise GeometryError(
            f"free boundary below {BAND_MIN}",
            location=first_violation(low),
            value=float(np.min(curve.values)),
        )
    X, R = grid.physical_image(curve)
    ETA = np.broadcast_to(grid.eta[None, :], grid.shape).copy()
    cross = -ETA * (curve.slope / curve.values)[:, None]
    if np.any(curve.values > BAND_MAX):
        logger.warning("free boundary exceeds %.3f (max %.6f)", BAND_MAX,
                       float(np.max(curve.values)))
    return MetricCoefficients(grid=grid, curve=curve, X=X, R=R, ETA=ETA, cross=cross)


@dataclass(frozen=True, eq=False)
class BoundaryFrame:
    """Unit tangent and outward unit normal along r = f(x), shape (nx+1, 2)."""

    tangent: np.ndarray
    normal: np.ndarray


def boundary_frames(curve: FreeBoundaryCurve) -> BoundaryFrame:
    return frames_from_slope(curve.slope)


def frames_from_slope(slope: np.ndarray) -> BoundaryFrame:
    fp = np.atleast_1d(np.asarray(slope, dtype=float))
    norm = np.sqrt(1.0 + fp * fp)
    tangent = np.stack([1.0 / norm, fp / norm], axis=1)
    normal = np.stack([-fp / norm, 1.0 / norm], axis=1)
    return BoundaryFrame(tangent=tangent, normal=normal)
