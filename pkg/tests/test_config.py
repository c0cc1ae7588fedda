"""Tests for run configuration parsing and validation."""

import pytest

from contact_swirl.core.config import RunConfig, build_profile, parse_config
from contact_swirl.errors import ConfigError, SupportConditionError


class TestParseConfig:

    def test_defaults(self):
        config = parse_config()
        assert isinstance(config, RunConfig)
        assert config.grid.nx == 64
        assert config.profile.family == "bump"
        assert config.sweep == []
        assert config.output.out_dir == "out"

    def test_file(self, config_file):
        config = parse_config(str(config_file))
        assert config.grid.L == 4.0
        assert config.grid.nx == 16
        assert config.diagnostics.windows == 4

    def test_inline_yaml(self):
        config = parse_config("grid:\n  nx: 32\nsweep: [0.0, 0.001]\n")
        assert config.grid.nx == 32
        assert config.sweep == [0.0, 0.001]

    def test_mapping_with_overrides(self):
        config = parse_config({"grid": {"nx": 32}},
                              {"grid.nr": 24, "solver.tol_outer": 1e-7, "seed": None})
        assert config.grid.nx == 32
        assert config.grid.nr == 24
        assert config.solver.tol_outer == 1e-7
        assert config.seed == 0

    def test_unknown_key_reports_path(self):
        with pytest.raises(ConfigError, match="grid.bogus"):
            parse_config({"grid": {"bogus": 1}})

    def test_missing_file(self, temp_dir):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(str(temp_dir / "absent.yaml"))

    def test_invalid_yaml(self):
        with pytest.raises(ConfigError, match="YAML"):
            parse_config("grid: [unclosed\n")

    def test_non_mapping(self):
        with pytest.raises(ConfigError, match="mapping"):
            parse_config("- 1\n- 2\n")

    def test_override_into_scalar(self):
        with pytest.raises(ConfigError, match="not a section"):
            parse_config({"grid": 3}, {"grid.nx": 32})


class TestValidation:

    def test_supersonic_gas(self):
        with pytest.raises(ConfigError, match="u0 not subsonic"):
            parse_config({"gas": {"u0": 2.0}})

    def test_coarse_grid(self):
        with pytest.raises(ConfigError, match="grid.nx"):
            parse_config({"grid": {"nx": 8}})

    def test_relaxation_range(self):
        with pytest.raises(ConfigError, match="solver.relax_inner"):
            parse_config({"solver": {"relax_inner": 0.0}})

    def test_quadrature_choice(self):
        config = parse_config({"solver": {"quadrature": "simpson"}})
        assert config.to_solver_config().quadrature == "simpson"
        with pytest.raises(ConfigError, match="solver.quadrature"):
            parse_config({"solver": {"quadrature": "gauss"}})

    def test_sweep_scales(self):
        with pytest.raises(ConfigError, match="non-negative"):
            parse_config({"sweep": [0.001, -0.001]})
        with pytest.raises(ConfigError, match="distinct"):
            parse_config({"sweep": [0.001, 0.001]})

    def test_unknown_family(self):
        with pytest.raises(ConfigError, match="unknown family"):
            parse_config({"profile": {"family": "spiral"}})

    def test_family_params_checked(self):
        with pytest.raises(ConfigError, match="profile.params"):
            parse_config({"profile": {"params": {"amp_bogus": 1.0}}})

    def test_support_condition_propagates(self, temp_dir):
        table = temp_dir / "leak.csv"
        rows = ["r,S_en,nu_en,ur_en"]
        for k in range(11):
            r = 0.05 * k
            rows.append(f"{r},1.0,0.0,{1e-3 * r}")
        table.write_text("\n".join(rows) + "\n", encoding="utf-8")
        with pytest.raises(SupportConditionError):
            parse_config({"profile": {"family": "table",
                                      "params": {"table_path": str(table)}}})


class TestDerivedObjects:

    def test_solver_config(self):
        config = parse_config({"grid": {"L": 4.0, "nx": 32, "nr": 16},
                               "solver": {"max_iter_outer": 7},
                               "diagnostics": {"windows": 3}})
        solver = config.to_solver_config()
        assert (solver.L, solver.nx, solver.nr) == (4.0, 32, 16)
        assert solver.max_iter_outer == 7
        assert solver.windows == 3
        assert solver.gas == config.gas.to_parameters()

    def test_profile_at_other_scale(self):
        config = parse_config({"profile": {"scale": 1e-3}})
        profile = build_profile(config, 2e-3)
        assert profile.scale == 2e-3
        assert build_profile(config).scale == 1e-3

    def test_random_family_uses_seed(self):
        config = parse_config({"profile": {"family": "random"}, "seed": 11})
        assert build_profile(config).seed == 11
