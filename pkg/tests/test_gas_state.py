"""Tests for the thermodynamic closure."""

import numpy as np
import pytest

from contact_swirl.core.gas_state import (
    GasParameters,
    VelocityTriple,
    bernoulli_of,
    density_derivatives,
    density_H,
    derive_background,
    pressure_of,
    velocity_from_potentials,
)
from contact_swirl.errors import (
    AxisCompatibilityError,
    CavitationError,
    ConfigError,
    SubsonicityError,
)


class TestBackground:

    def test_invariants(self, background):
        assert background.S0_minus == pytest.approx(1.0)
        assert background.S0_plus == pytest.approx(1.5 ** -1.4)
        assert background.B0_minus == pytest.approx(0.045 + 3.5)
        assert background.B0_plus == pytest.approx(3.5 / 1.5)
        assert background.mass_flux == pytest.approx(0.3)

    def test_supersonic_background_rejected(self):
        with pytest.raises(SubsonicityError):
            derive_background(GasParameters(u0=2.0))

    def test_non_positive_parameter_rejected(self):
        with pytest.raises(ConfigError, match="p0"):
            derive_background(GasParameters(p0=0.0))

    def test_gamma_must_exceed_one(self):
        with pytest.raises(ConfigError, match="gamma"):
            derive_background(GasParameters(gamma=1.0))


class TestDensity:

    def test_background_round_trip(self, background):
        u = VelocityTriple(background.u0, 0.0, 0.0)
        rho = density_H(background.S0_minus, u, background.B0_minus)
        assert rho == pytest.approx(background.rho0, rel=1e-14)
        p = pressure_of(background.S0_minus, rho, background.gamma)
        assert p == pytest.approx(background.p0, rel=1e-14)
        assert bernoulli_of(u, rho, p) == pytest.approx(background.B0_minus, rel=1e-14)

    def test_array_broadcast(self, background):
        speeds = np.linspace(0.1, 0.5, 7)
        u = VelocityTriple(speeds, np.zeros(7), np.zeros(7))
        rho = density_H(np.full(7, background.S0_minus), u, background.B0_minus)
        assert rho.shape == (7,)
        assert np.all(np.diff(rho) < 0.0)

    def test_cavitation(self, background):
        u = VelocityTriple(3.0, 0.0, 0.0)
        with pytest.raises(CavitationError):
            density_H(background.S0_minus, u, background.B0_minus)

    def test_negative_entropy_is_cavitation(self, background):
        u = VelocityTriple(np.full(3, background.u0), np.zeros(3), np.zeros(3))
        with pytest.raises(CavitationError) as exc:
            density_H(np.array([1.0, -1.0, 1.0]), u, background.B0_minus)
        assert exc.value.location == (1,)

    def test_supersonic_state(self, background):
        u = VelocityTriple(1.2, 0.0, 0.0)
        with pytest.raises(SubsonicityError):
            density_H(background.S0_minus, u, background.B0_minus)
        rho = density_H(background.S0_minus, u, background.B0_minus,
                        check_subsonic=False)
        assert rho > 0.0

    def test_derivatives_match_finite_differences(self, background):
        S, B0, g = background.S0_minus, background.B0_minus, background.gamma
        q = 0.35
        rho = density_H(S, VelocityTriple(q, 0.0, 0.0), B0, g)
        dH_dS, k = density_derivatives(S, rho, g)

        delta = 1e-6
        fd_S = (density_H(S + delta, VelocityTriple(q, 0.0, 0.0), B0, g)
                - density_H(S - delta, VelocityTriple(q, 0.0, 0.0), B0, g)) / (2 * delta)
        fd_q = (density_H(S, VelocityTriple(q + delta, 0.0, 0.0), B0, g)
                - density_H(S, VelocityTriple(q - delta, 0.0, 0.0), B0, g)) / (2 * delta)
        assert dH_dS == pytest.approx(fd_S, rel=1e-6)
        assert k * q == pytest.approx(fd_q, rel=1e-6)


class TestVelocityReconstruction:

    def test_off_axis(self):
        u = velocity_from_potentials((0.3, 0.01), 0.02, (0.001, 0.1), 0.05, 0.25)
        assert u.u_x == pytest.approx(0.3 + 0.02 / 0.25 + 0.1)
        assert u.u_r == pytest.approx(0.01 - 0.001)
        assert u.u_theta == pytest.approx(0.2)

    def test_axis_limits(self):
        r = np.array([0.0, 0.1])
        u = velocity_from_potentials((np.full(2, 0.3), np.zeros(2)), np.array([0.0, 0.01]),
                                     (np.zeros(2), np.full(2, 0.1)), np.array([0.0, 0.0]),
                                     r, dr_Lambda=np.array([0.4, 0.0]))
        assert u.u_x[0] == pytest.approx(0.3 + 0.2)
        assert u.u_r[0] == 0.0
        assert u.u_theta[0] == pytest.approx(0.4)

    def test_axis_compatibility(self):
        with pytest.raises(AxisCompatibilityError):
            velocity_from_potentials((0.3, 0.0), 1e-3, (0.0, 0.0), 0.0, 0.0)
