"""Tests for the post-solve diagnostics."""

import dataclasses

import numpy as np
import pytest
import yaml

from contact_swirl.core.diagnostics import (
    BERNOULLI_GATE,
    compute_omega,
    farfield_report,
    invariant_report,
    run_diagnostics,
)
from contact_swirl.core.gas_state import VelocityTriple
from contact_swirl.core.solver import solve_full
from contact_swirl.errors import ConfigError, ConsistencyError
from contact_swirl.profiles import create_profile

REFINEMENT_GRIDS = ((32, 16), (64, 32), (128, 64))


def _with_radial_bump(state, amplitude):
    R, X = state.metrics.R, state.metrics.X
    L = state.grid.L
    bump = amplitude * np.sin(np.pi * X / L) * np.sin(2.0 * np.pi * R)
    u = VelocityTriple(state.u.u_x, bump, state.u.u_theta)
    return dataclasses.replace(state, u=u)


def _ratios(values):
    return [a / b for a, b in zip(values[:-1], values[1:])]


@pytest.fixture(scope="module")
def refined_states(make_solver_config, bump_profile):
    """Converged states of one profile on three nested grids."""
    states = []
    for nx, nr in REFINEMENT_GRIDS:
        state, report = solve_full(make_solver_config(nx=nx, nr=nr), bump_profile)
        assert report.converged, report.error
        states.append(state)
    return states


class TestBackgroundInvariants:

    def test_residuals_vanish(self, background_state):
        section = invariant_report(background_state)
        for name, value in section.euler_residuals.items():
            assert value <= 1e-12, name
        assert section.bernoulli_deviation <= 1e-12
        assert section.interface_pressure_jump <= 1e-12
        assert section.interface_normal_velocity == 0.0
        assert section.flux_imbalance_max <= 1e-12
        assert section.stream_bernoulli_residual <= 1e-12

    def test_positivity_margins(self, background_state, background):
        section = invariant_report(background_state)
        assert section.subsonic_margin == pytest.approx(background.c0**2 - background.u0**2)
        assert section.density_min == pytest.approx(background.rho0)
        assert section.o_floor_ratio == pytest.approx(4.0)

    def test_interface_trace(self, background_state):
        section = invariant_report(background_state)
        assert section.interface_trace == {"entropy": 0.0, "angular_momentum": 0.0}
        assert section.free_boundary_ode == {"max": 0.0, "l2": 0.0}

    def test_gates_pass(self, background_state):
        report = run_diagnostics(background_state, windows=4)
        assert all(report.gates.values())
        assert report.bernoulli_deviation <= BERNOULLI_GATE


class TestPerturbedInvariants:

    def test_radial_bump_breaks_continuity(self, background_state):
        state = _with_radial_bump(background_state, 1e-3)
        section = invariant_report(state)
        assert section.euler_residuals["continuity"] > 1e-6
        assert section.euler_residuals["radial_momentum"] > 0.0

    def test_swirl_solution_gates(self, perturbed_solve):
        state, report = perturbed_solve
        diagnostics = report.diagnostics
        assert diagnostics is not None
        assert diagnostics.gates["bernoulli"]
        assert diagnostics.conservation.subsonic_margin > 0.0
        assert diagnostics.omega_disagreement <= diagnostics.omega_tolerance
        assert diagnostics.gates["omega"]


class TestOmega:

    def test_axis_vanishes(self, background_state):
        omega = compute_omega(background_state)
        assert np.all(omega.direct[:, 0] == 0.0)
        assert np.all(omega.from_stream[:, 0] == 0.0)
        assert omega.disagreement <= omega.tolerance

    def test_tolerance_scales_with_grid(self, background_state, background):
        omega = compute_omega(background_state)
        grid = background_state.grid
        h = max(grid.h_x, 0.5 * grid.h_eta)
        assert omega.tolerance == pytest.approx(10.0 * h * h * background.mass_flux
                                                + 1e-12)

    def test_inconsistent_state_reported(self, background_state):
        state = _with_radial_bump(background_state, 1.0)
        omega = compute_omega(state)
        assert omega.disagreement > omega.tolerance

    def test_inconsistent_state_strict(self, background_state):
        state = _with_radial_bump(background_state, 1.0)
        with pytest.raises(ConsistencyError):
            compute_omega(state, strict=True)

    def test_inconsistent_state_fails_gate(self, background_state):
        state = _with_radial_bump(background_state, 1.0)
        report = run_diagnostics(state, windows=4)
        assert report.omega_disagreement > report.omega_tolerance
        assert report.gates["omega"] is False

    def test_farfield_omega_matches_direct(self, background_state):
        state = _with_radial_bump(background_state, 1e-3)
        direct = compute_omega(state).direct
        section = farfield_report(state, windows=4)
        cols = state.grid.x <= section.windows[0].x_end + 1e-12
        assert section.windows[0].omega_max == pytest.approx(
            float(np.max(np.abs(direct[cols]))))


class TestFarfield:

    def test_windows(self, background_state):
        section = farfield_report(background_state, windows=4)
        assert len(section.windows) == 4
        assert section.windows[0].x_start == 0.0
        assert section.windows[-1].x_end == pytest.approx(background_state.grid.L)
        assert set(section.decay_flags) == set(section.decay_ratios)

    def test_decay_of_localized_bump(self, background_state):
        R, X = background_state.metrics.R, background_state.metrics.X
        bump = 1e-3 * np.exp(-4.0 * X) * np.sin(2.0 * np.pi * R)
        u = VelocityTriple(background_state.u.u_x, bump, background_state.u.u_theta)
        section = farfield_report(dataclasses.replace(background_state, u=u), windows=4)
        assert section.decay_ratios["ur_c1"] < 0.25
        assert section.decay_flags["ur_c1"]

    def test_window_count(self, background_state):
        with pytest.raises(ConfigError, match="windows"):
            farfield_report(background_state, windows=1)


class TestReportDocument:

    def test_plain_values(self, background_state):
        data = run_diagnostics(background_state, windows=3).to_dict()
        text = yaml.safe_dump(data, sort_keys=True)
        assert "policy" in data["farfield"]
        assert yaml.safe_load(text) == data

    def test_sections(self, background_state):
        data = run_diagnostics(background_state).to_dict()
        assert set(data) == {"conservation", "farfield", "omega_disagreement",
                             "omega_tolerance", "gates"}
        assert len(data["conservation"]["flux_imbalance"]) == background_state.grid.nx + 1


@pytest.mark.slow
class TestRefinement:

    def test_continuity_second_order(self, refined_states):
        residuals = [invariant_report(s).euler_residuals["continuity"]
                     for s in refined_states]
        assert all(r >= 3.0 for r in _ratios(residuals)), residuals

    def test_interface_normal_velocity_second_order(self, refined_states):
        values = [invariant_report(s).interface_normal_velocity for s in refined_states]
        assert all(r >= 3.0 for r in _ratios(values)), values
        assert values[-1] < 1e-4

    def test_interface_pressure_jump_second_order(self, refined_states):
        values = [invariant_report(s).interface_pressure_jump for s in refined_states]
        assert all(r >= 3.0 for r in _ratios(values)), values
        assert values[-1] < 1e-4

    def test_flux_imbalance_second_order(self, refined_states):
        # the solver balances the trapezoid flux; Simpson measures its quadrature error
        values = [invariant_report(s, "simpson").flux_imbalance_max
                  for s in refined_states]
        assert all(r >= 3.0 for r in _ratios(values)), values


@pytest.mark.slow
class TestFarfieldDecay:

    def test_swirling_run_decays(self, make_solver_config, background):
        profile = create_profile("bump", background, scale=1e-3)
        state, report = solve_full(make_solver_config(L=10.0, nx=64, nr=16), profile)
        assert report.converged
        assert np.max(np.abs(state.u.u_theta)) > 0.0
        section = farfield_report(state, windows=5, decay_ratio=0.25)
        first, last = section.windows[0], section.windows[-1]
        assert last.ur_c1 <= 0.25 * first.ur_c1
        assert last.radial_balance <= 0.25 * first.radial_balance
        assert section.decay_flags["ur_c1"]
        assert section.decay_flags["radial_balance"]
