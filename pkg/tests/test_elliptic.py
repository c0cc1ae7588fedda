"""Tests for the phi and psi elliptic problems."""

import numpy as np
import pytest

from contact_swirl.core.elliptic import (
    FluxField,
    PhiOperator,
    PhiProblem,
    PsiOperator,
    PsiProblem,
    assemble_flux_F,
    assemble_linearization_aii,
    assemble_source_G,
    solve_psi,
    transversal_velocity,
)
from contact_swirl.core.free_boundary import FreeBoundaryCurve
from contact_swirl.core.gas_state import GasParameters, derive_background
from contact_swirl.core.geometry import build_reference_grid, metric_coefficients
from contact_swirl.core.verify import check_radial_ode_oracle, radial_ode_oracle
from contact_swirl.errors import (
    AxisCompatibilityError,
    EllipticityError,
    SupportConditionError,
)


def _flat(L, n):
    grid = build_reference_grid(L, n, n)
    return metric_coefficients(grid.flat_curve(), grid)


def _wavy(L, n):
    """f = 1/2 + 0.02 (1 - cos(2 pi x / L)), anchored with flat ends."""
    grid = build_reference_grid(L, n, n)
    values = 0.5 + 0.02 * (1.0 - np.cos(2.0 * np.pi * grid.x / L))
    values[0] = 0.5
    return metric_coefficients(FreeBoundaryCurve(x=grid.x, values=values), grid)


def _observed_order(errors):
    return float(np.log2(errors[0] / errors[-1]) / (len(errors) - 1))


def _phi_manufactured_error(coeffs, n):
    """p = (1 - x) e^x cos(pi r) on the unit-length flat cylinder."""
    metrics = _flat(1.0, n)
    X, R = metrics.X, metrics.R
    exact = (1.0 - X) * np.exp(X) * np.cos(np.pi * R)
    flux = FluxField(
        x=coeffs.a11 * (-X * np.exp(X) * np.cos(np.pi * R)),
        r=coeffs.a22 * (-(1.0 - X) * np.exp(X) * np.pi * np.sin(np.pi * R)),
    )
    entrance = exact[0].copy()
    entrance[-1] = 0.0
    phi = PhiOperator(coeffs, metrics).solve(PhiProblem(flux=flux, entrance=entrance))
    return float(np.max(np.abs(phi - exact)))


def _psi_cubic_error(n):
    metrics = _flat(1.0, n)
    problem = PsiProblem(source=-8.0 * metrics.R, robin=np.ones(metrics.grid.nx + 1))
    psi = PsiOperator(metrics).solve(problem)
    return float(np.max(np.abs(psi - metrics.R**3)))


def _psi_curved_error(n):
    """psi = r^3 cos(pi x) below the wavy boundary; Neumann ends hold exactly."""
    metrics = _wavy(1.0, n)
    X, R = metrics.X, metrics.R
    source = (np.pi**2 * R**3 - 8.0 * R) * np.cos(np.pi * X)
    x, f, fp = metrics.curve.x, metrics.f, metrics.fp
    robin = ((4.0 * f**2 * np.cos(np.pi * x) + np.pi * fp * f**3 * np.sin(np.pi * x))
             / np.sqrt(1.0 + fp**2))
    psi = PsiOperator(metrics).solve(PsiProblem(source=source, robin=robin))
    return float(np.max(np.abs(psi - R**3 * np.cos(np.pi * X))))


class TestLinearization:

    def test_coefficients(self, background):
        coeffs = assemble_linearization_aii(background)
        assert coeffs.a11 == pytest.approx(1.0 - 0.09 / 1.4)
        assert coeffs.a22 == coeffs.a33 == background.rho0
        assert 0.0 < coeffs.nu <= 0.1
        for a in (coeffs.a11, coeffs.a22, coeffs.a33):
            assert coeffs.nu < a < 1.0 / coeffs.nu

    def test_near_sonic_background(self):
        with pytest.raises(EllipticityError):
            assemble_linearization_aii(derive_background(GasParameters(u0=1.183)))


class TestPhiProblem:

    def test_manufactured_solution(self, background):
        coeffs = assemble_linearization_aii(background)
        assert _phi_manufactured_error(coeffs, 32) < 5e-3

    @pytest.mark.slow
    def test_second_order_refinement(self, background):
        coeffs = assemble_linearization_aii(background)
        errors = [_phi_manufactured_error(coeffs, n) for n in (16, 32, 64)]
        assert errors[0] > errors[1] > errors[2]
        assert _observed_order(errors) >= 1.9

    def test_maximum_principle(self, background):
        coeffs = assemble_linearization_aii(background)
        metrics = _flat(1.0, 32)
        zeros = np.zeros(metrics.shape)
        entrance = np.cos(np.pi * metrics.R[0])
        entrance[-1] = 0.0
        phi = PhiOperator(coeffs, metrics).solve(
            PhiProblem(flux=FluxField(zeros, zeros), entrance=entrance))
        assert phi.min() >= -1e-12
        assert phi.max() <= entrance.max() + 1e-12
        assert phi[1:].max() < entrance.max()

    def test_mirror_symmetry(self, background):
        coeffs = assemble_linearization_aii(background)
        metrics = _flat(1.0, 32)
        X, R = metrics.X, metrics.R
        # odd F_x and even F_r about x = L/2 give an even divergence
        flux = FluxField(x=np.sin(2.0 * np.pi * X) * np.cos(np.pi * R),
                         r=np.cos(2.0 * np.pi * X) * R)
        phi = PhiOperator(coeffs, metrics).solve(
            PhiProblem(flux=flux, entrance=np.zeros(metrics.shape[1])))
        assert np.max(np.abs(phi)) > 1e-3
        assert np.allclose(phi, phi[::-1], atol=1e-10)

    def test_zero_data_gives_zero(self, background, flat_metrics):
        coeffs = assemble_linearization_aii(background)
        zeros = np.zeros(flat_metrics.shape)
        phi = PhiOperator(coeffs, flat_metrics).solve(
            PhiProblem(flux=FluxField(zeros, zeros), entrance=np.zeros(zeros.shape[1])))
        assert np.all(phi == 0.0)

    def test_entrance_must_vanish_at_interface(self, flat_metrics):
        zeros = np.zeros(flat_metrics.shape)
        entrance = np.zeros(zeros.shape[1])
        entrance[-1] = 1e-6
        with pytest.raises(SupportConditionError, match="entrance potential") as exc:
            PhiProblem(flux=FluxField(zeros, zeros), entrance=entrance)
        assert exc.value.exit_code == 3
        assert exc.value.value == pytest.approx(1e-6)


class TestPsiProblem:

    def test_radial_oracle_agreement(self):
        result = check_radial_ode_oracle()
        assert result.passed, result.detail

    def test_radial_oracle_cubic(self):
        n = 64
        r = np.linspace(0.0, 0.5, n + 1)
        psi = radial_ode_oracle(-8.0 * r, 1.0, 0.5)
        assert np.max(np.abs(psi - r**3)) < 1e-3

    def test_cubic_solution(self):
        assert _psi_cubic_error(32) < 1e-3

    @pytest.mark.slow
    def test_second_order_refinement(self):
        errors = [_psi_cubic_error(n) for n in (16, 32, 64)]
        assert _observed_order(errors) >= 1.9

    def test_curved_boundary_solution(self):
        assert _psi_curved_error(32) < 1e-3

    @pytest.mark.slow
    def test_curved_boundary_refinement(self):
        errors = [_psi_curved_error(n) for n in (16, 32, 64)]
        assert errors[0] > errors[1] > errors[2]
        assert _observed_order(errors) >= 1.9

    def test_mirror_symmetry(self):
        metrics = _flat(1.0, 32)
        X, R = metrics.X, metrics.R
        source = R * (1.0 + np.cos(2.0 * np.pi * X))
        psi = PsiOperator(metrics).solve(
            PsiProblem(source=source, robin=np.full(metrics.grid.nx + 1, 0.1)))
        assert np.allclose(psi, psi[::-1], atol=1e-10)

    def test_axis_source_rejected(self, flat_metrics):
        source = np.ones(flat_metrics.shape)
        with pytest.raises(AxisCompatibilityError):
            PsiProblem(source=source, robin=np.zeros(flat_metrics.grid.nx + 1))

    def test_solution_vanishes_on_axis(self, flat_metrics):
        problem = PsiProblem(source=-8.0 * flat_metrics.R,
                             robin=np.ones(flat_metrics.grid.nx + 1))
        field = solve_psi(problem, flat_metrics)
        assert np.all(field.values[:, 0] == 0.0)

    def test_robin_coefficient_negative(self, flat_metrics):
        mu = PsiProblem.robin_coefficient(flat_metrics)
        assert np.all(mu < 0.0)
        assert np.allclose(mu, -2.0)


class TestRightHandSides:

    def test_background_flux_vanishes(self, background, flat_metrics):
        coeffs = assemble_linearization_aii(background)
        zeros = np.zeros(flat_metrics.shape)
        S = np.full(flat_metrics.shape, background.S0_minus)
        flux = assemble_flux_F(S, zeros, zeros, zeros, metrics=flat_metrics,
                               background=background, coeffs=coeffs)
        assert np.max(np.abs(flux.x)) < 1e-14
        assert np.max(np.abs(flux.r)) < 1e-14

    def test_background_source_vanishes(self, background, flat_metrics):
        zeros = np.zeros(flat_metrics.shape)
        S = np.full(flat_metrics.shape, background.S0_minus)
        t = transversal_velocity(zeros, flat_metrics)
        G = assemble_source_G(S, zeros, zeros, zeros, t,
                              (np.full(zeros.shape, background.u0), zeros),
                              R=flat_metrics.R, background=background)
        assert np.all(G == 0.0)

    def test_transversal_velocity_axis(self, flat_metrics):
        psi = flat_metrics.R**2
        t = transversal_velocity(psi, flat_metrics)
        assert np.all(t.u_r[:, 0] == 0.0)
        assert np.allclose(t.u_x[:, 1:-1], 3.0 * flat_metrics.R[:, 1:-1])
