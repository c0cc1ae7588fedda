"""Shared fixtures: gas, small grids and cheap solution states."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from contact_swirl.core.gas_state import GasParameters, derive_background
from contact_swirl.core.geometry import build_reference_grid, metric_coefficients
from contact_swirl.core.solver import ContactSolver, SolverConfig, build_solution_state
from contact_swirl.profiles import create_profile

SMALL_GRID = {"L": 4.0, "nx": 32, "nr": 16}


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture(scope="session")
def gas():
    return GasParameters()


@pytest.fixture(scope="session")
def background(gas):
    return derive_background(gas)


@pytest.fixture(scope="session")
def small_grid():
    return build_reference_grid(**SMALL_GRID)


@pytest.fixture(scope="session")
def flat_metrics(small_grid):
    return metric_coefficients(small_grid.flat_curve(), small_grid)


@pytest.fixture(scope="session")
def bump_profile(background):
    return create_profile("bump", background, scale=1e-3)


@pytest.fixture(scope="session")
def background_state(background, small_grid, flat_metrics):
    """Exact background on the flat geometry, assembled without iterating."""
    shape = small_grid.shape
    return build_solution_state(
        small_grid.flat_curve(), flat_metrics, background,
        (background.S0_minus, 0.0),
        phi=np.zeros(shape), psi=np.zeros(shape),
        S=np.full(shape, background.S0_minus), Lambda=np.zeros(shape),
    )


@pytest.fixture(scope="session")
def make_solver_config(gas):
    """SolverConfig factory on the small grid."""
    def make(**overrides):
        return SolverConfig(gas=gas, **{**SMALL_GRID, **overrides})
    return make


@pytest.fixture(scope="session")
def perturbed_solve(make_solver_config, bump_profile):
    """(state, report) of a small-amplitude solve on the small grid."""
    return ContactSolver(make_solver_config(), bump_profile).solve_full()


@pytest.fixture
def config_file(temp_dir):
    """Small-grid YAML config for CLI and runner tests."""
    path = temp_dir / "config.yaml"
    path.write_text(
        "grid:\n"
        "  L: 4.0\n"
        "  nx: 16\n"
        "  nr: 16\n"
        "profile:\n"
        "  family: bump\n"
        "  scale: 0.001\n"
        "diagnostics:\n"
        "  windows: 4\n",
        encoding="utf-8",
    )
    return path
