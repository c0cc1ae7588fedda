"""Tests for entrance profile families."""

import numpy as np
import pytest

from contact_swirl.profiles import (
    ENTRANCE_RADIUS,
    BumpProfile,
    RandomBumpProfile,
    TableProfile,
    create_profile,
)
from contact_swirl.errors import ConfigError, SupportConditionError


def _write_table(path, S, nu, ur, n=41):
    r = np.linspace(0.0, ENTRANCE_RADIUS, n)
    lines = ["r,S_en,nu_en,ur_en"]
    for rk in r:
        lines.append(",".join(repr(float(v)) for v in (rk, S(rk), nu(rk), ur(rk))))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestBumpProfile:

    def test_axis_values(self, bump_profile):
        assert float(bump_profile.ur_en(0.0)) == 0.0
        assert float(bump_profile.nu_en(0.0)) == 0.0
        assert float(bump_profile.Lambda_en(0.0)) == 0.0

    def test_radial_speed_support(self, bump_profile):
        band = np.linspace(ENTRANCE_RADIUS - bump_profile.epsilon, ENTRANCE_RADIUS, 11)
        assert np.all(bump_profile.ur_en(band) == 0.0)

    def test_interface_values(self, background, bump_profile):
        S_if, L_if = bump_profile.interface_values()
        assert S_if == pytest.approx(background.S0_minus * (1.0 - 1e-3))
        assert L_if == pytest.approx(0.5 * 1e-3 * background.u0)

    def test_entrance_potential(self, bump_profile):
        cutoff = ENTRANCE_RADIUS - bump_profile.epsilon
        values = bump_profile.phi_en(np.array([0.0, 0.2, cutoff, ENTRANCE_RADIUS]))
        assert values[2] == 0.0
        assert values[3] == 0.0
        # ur_en > 0 on (0, cutoff), so the potential climbs towards the cutoff
        assert values[0] < values[1] < 0.0

    def test_sigma_is_linear_in_scale(self, background):
        one = create_profile("bump", background, scale=1e-3)
        two = create_profile("bump", background, scale=2e-3)
        assert two.sigma == pytest.approx(2.0 * one.sigma, rel=1e-6)

    def test_zero_scale_is_background(self, background):
        profile = create_profile("bump", background, scale=0.0)
        assert profile.is_background
        assert np.all(profile.S_en(np.linspace(0, 0.5, 9)) == background.S0_minus)

    def test_describe(self, bump_profile):
        info = bump_profile.describe()
        assert info["family"] == "bump"
        assert info["scale"] == 1e-3
        assert info["sigma"] == bump_profile.sigma

    def test_epsilon_range(self, background):
        with pytest.raises(ConfigError, match="epsilon"):
            BumpProfile(background, epsilon=0.2)


class TestRandomProfile:

    def test_seeded(self, background):
        a = create_profile("random", background, scale=1e-3, seed=7)
        b = create_profile("random", background, scale=1e-3, seed=7)
        c = create_profile("random", background, scale=1e-3, seed=8)
        r = np.linspace(0.0, 0.5, 17)
        assert np.array_equal(a.S_en(r), b.S_en(r))
        assert not np.array_equal(a.S_en(r), c.S_en(r))

    def test_admissible(self, background):
        profile = RandomBumpProfile(background, scale=1e-3, seed=3, modes=4)
        profile.validate()
        band = np.linspace(ENTRANCE_RADIUS - profile.epsilon, ENTRANCE_RADIUS, 11)
        assert np.all(profile.ur_en(band) == 0.0)


class TestTableProfile:

    def test_background_table(self, background, temp_dir):
        path = _write_table(temp_dir / "flat.csv", lambda r: background.S0_minus,
                            lambda r: 0.0, lambda r: 0.0)
        profile = create_profile("table", background, table_path=path)
        assert isinstance(profile, TableProfile)
        assert profile.sigma == 0.0

    def test_radial_speed_leak_rejected(self, background, temp_dir):
        path = _write_table(temp_dir / "leak.csv", lambda r: background.S0_minus,
                            lambda r: 0.0, lambda r: 1e-3 * r)
        with pytest.raises(SupportConditionError, match="support"):
            create_profile("table", background, table_path=path)

    def test_axis_slope_rejected(self, background, temp_dir):
        path = _write_table(temp_dir / "slope.csv",
                            lambda r: background.S0_minus + 1e-2 * r,
                            lambda r: 0.0, lambda r: 0.0)
        with pytest.raises(SupportConditionError, match="axis compatibility"):
            create_profile("table", background, table_path=path)

    def test_missing_file(self, background, temp_dir):
        with pytest.raises(ConfigError, match="not found"):
            create_profile("table", background, table_path=temp_dir / "none.csv")

    def test_radii_must_span_entrance(self, background, temp_dir):
        path = temp_dir / "short.csv"
        path.write_text("r,S_en,nu_en,ur_en\n0.0,1,0,0\n0.1,1,0,0\n0.2,1,0,0\n"
                        "0.3,1,0,0\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="span"):
            create_profile("table", background, table_path=path)


class TestRegistry:

    def test_unknown_family(self, background):
        with pytest.raises(ConfigError, match="unknown family"):
            create_profile("spiral", background)
