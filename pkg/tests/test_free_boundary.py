"""Tests for the contact-interface machinery."""

import numpy as np
import pytest

from contact_swirl.core.free_boundary import (
    ANCHOR,
    FreeBoundaryCurve,
    free_boundary_ode_residual,
    interface_speed,
    robin_data_B,
    update_free_boundary,
)
from contact_swirl.errors import (
    FreeBoundaryCollapseError,
    GeometryError,
    InterfaceEnergyError,
    TransportDegeneracyError,
)


class TestCurve:

    def test_flat(self, small_grid):
        curve = small_grid.flat_curve()
        assert np.all(curve.values == ANCHOR)
        assert np.all(curve.slope == 0.0)
        assert curve.max_deviation() == 0.0

    def test_anchor_required(self, small_grid):
        values = np.full(small_grid.nx + 1, 0.51)
        with pytest.raises(GeometryError, match="anchored"):
            FreeBoundaryCurve(x=small_grid.x, values=values)

    def test_reanchor_records_drift(self, small_grid):
        values = np.full(small_grid.nx + 1, 0.51)
        curve = FreeBoundaryCurve.anchored(small_grid.x, values)
        assert curve.values[0] == ANCHOR
        assert curve.anchor_drift == pytest.approx(0.01)
        assert curve.values[1] == 0.51

    def test_end_slopes_clamped(self, small_grid):
        values = 0.5 + 0.01 * small_grid.x / small_grid.L
        curve = FreeBoundaryCurve(x=small_grid.x, values=values)
        assert curve.slope[0] == 0.0
        assert curve.slope[-1] == 0.0
        assert curve.slope[5] == pytest.approx(0.01 / small_grid.L)

    def test_band(self, small_grid):
        values = np.full(small_grid.nx + 1, 0.5)
        values[7] = 0.7
        curve = FreeBoundaryCurve(x=small_grid.x, values=values)
        with pytest.raises(GeometryError, match="band") as exc:
            curve.check_band()
        assert exc.value.location == (7,)


class TestInterfaceData:

    def test_background_speed(self, background):
        speed = interface_speed(background.S0_minus, 0.0, 0.5, background)
        assert speed[0] == pytest.approx(background.u0, rel=1e-12)

    def test_background_robin_data(self, background, small_grid):
        curve = small_grid.flat_curve()
        robin = robin_data_B(curve.values, curve.slope, background.S0_minus, 0.0,
                             background)
        assert np.max(np.abs(robin.values)) < 1e-12

    def test_swirl_lowers_speed(self, background):
        still = interface_speed(background.S0_minus, 0.0, 0.5, background)
        swirling = interface_speed(background.S0_minus, 0.01, 0.5, background)
        assert swirling[0] < still[0]

    def test_energy_radicand(self, background):
        with pytest.raises(InterfaceEnergyError):
            interface_speed(background.S0_minus, 1.0, 0.5, background)


class TestUpdate:

    def test_background_is_fixed_point(self, background, small_grid, flat_metrics):
        rho_ux = np.full(small_grid.shape, background.mass_flux)
        curve = update_free_boundary(small_grid.flat_curve(), rho_ux, background,
                                     flat_metrics)
        assert curve.max_deviation() < 1e-14

    def test_reduced_flux_widens(self, background, small_grid, flat_metrics):
        rho_ux = np.full(small_grid.shape, background.mass_flux)
        rho_ux[1:] *= 0.9
        curve = update_free_boundary(small_grid.flat_curve(), rho_ux, background,
                                     flat_metrics)
        assert curve.values[0] == ANCHOR
        assert np.allclose(curve.values[1:], np.sqrt(0.275), atol=1e-14)

    def test_collapse(self, background, small_grid, flat_metrics):
        rho_ux = np.full(small_grid.shape, background.mass_flux)
        rho_ux[1:] *= 2.0
        with pytest.raises(FreeBoundaryCollapseError):
            update_free_boundary(small_grid.flat_curve(), rho_ux, background,
                                 flat_metrics)

    def test_flux_floor(self, background, small_grid, flat_metrics):
        rho_ux = np.full(small_grid.shape, 0.3 * background.mass_flux)
        with pytest.raises(TransportDegeneracyError):
            update_free_boundary(small_grid.flat_curve(), rho_ux, background,
                                 flat_metrics)


class TestOdeResidual:

    def test_horizontal_flow(self, background, small_grid):
        u_x = np.full(small_grid.shape, background.u0)
        u_r = np.zeros(small_grid.shape)
        residual = free_boundary_ode_residual(small_grid.flat_curve(), u_x, u_r)
        assert residual.max_norm == 0.0
        assert residual.l2_norm == 0.0

    def test_misaligned_flow(self, background, small_grid):
        u_x = np.full(small_grid.shape, background.u0)
        u_r = np.full(small_grid.shape, 0.1 * background.u0)
        residual = free_boundary_ode_residual(small_grid.flat_curve(), u_x, u_r)
        assert residual.max_norm == pytest.approx(0.1)
        assert residual.l2_norm == pytest.approx(0.1)
