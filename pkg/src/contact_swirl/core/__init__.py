"""
Numerical core: gas closure, geometry, elliptic and transport solvers,
free-boundary update, the nested fixed-point driver and diagnostics.
"""
from .gas_state import (
    BackgroundState,
    GasParameters,
    VelocityTriple,
    bernoulli_of,
    density_H,
    derive_background,
    velocity_from_potentials,
)

__all__ = [
    "BackgroundState",
    "GasParameters",
    "VelocityTriple",
    "bernoulli_of",
    "density_H",
    "derive_background",
    "velocity_from_potentials",
]
