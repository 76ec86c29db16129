"""Tests for run configuration loading and merging."""
import json

import pytest

from config.design import DESIGN_DEFAULTS
from engine.conformal import Facing
from engine.errors import ConfigError
from engine.runconfig import build_run_config, load_run_config, validate


class TestValidate:
    def test_accepts_defaults(self):
        """The design defaults validate unchanged."""
        assert validate(dict(DESIGN_DEFAULTS)) == DESIGN_DEFAULTS

    def test_integer_accepted_for_float(self):
        """Integers are accepted for float keys."""
        validate({"w_um": 10})

    def test_bool_is_not_a_number(self):
        """Booleans are not lengths."""
        with pytest.raises(ConfigError):
            validate({"w_um": True})

    def test_unknown_entry_key(self):
        """Unknown keys inside list entries are named with their path."""
        with pytest.raises(ConfigError, match=r"positions\[0\]\.z_um"):
            validate({"positions": [{"x_um": 1.0, "y_um": 1.0, "z_um": 0.0}]})

    @pytest.mark.parametrize("raw", [
        {"facing": "glass"}, {"method": "fem"}, {"linear_solver": "jacobi"},
    ])
    def test_enumerations(self, raw):
        """Enumerated keys reject values outside their set."""
        with pytest.raises(ConfigError):
            validate(raw)

    def test_not_an_object(self):
        """The top level must be a JSON object."""
        with pytest.raises(ConfigError):
            validate([1, 2, 3])


class TestBuildRunConfig:
    def test_defaults(self):
        """Without a file the reference design is used."""
        cfg = build_run_config()
        x = cfg.section()
        assert x.t == pytest.approx(0.15)
        assert x.facing is Facing.METAL
        assert cfg.method == "both"
        assert cfg.workers >= 1
        assert cfg.points() == [cfg.values]

    def test_command_line_wins(self):
        """Command-line values beat file values."""
        cfg = build_run_config({"method": "fd", "workers": 2}, method="conf", workers=1)
        assert cfg.method == "conf"
        assert cfg.workers == 1

    def test_lambda_override_sets_flag(self):
        """--lambda-nm marks the run as kinetic."""
        cfg = build_run_config(lambda_nm=90.0)
        assert cfg.values["lambda_nm"] == 90.0
        assert cfg.lambda_override

    def test_rejects_non_positive_lambda(self):
        """A zero penetration depth is refused."""
        with pytest.raises(ConfigError):
            build_run_config(lambda_nm=0.0)

    def test_solver_overrides_split_from_design(self):
        """Solver keys land in the solver settings."""
        cfg = build_run_config({"growth": 1.3, "linear_solver": "cg"})
        assert cfg.solver["growth"] == 1.3
        assert cfg.solver["linear_solver"] == "cg"
        assert "growth" not in cfg.values

    def test_testing_environment(self):
        """The testing environment selects the coarse grid."""
        cfg = build_run_config(env="testing")
        assert cfg.solver["growth"] == 1.4
        assert cfg.solver["max_cell_um"] == 40.0

    def test_sweep_points(self):
        """A sweep expands into one point per value."""
        cfg = build_run_config(sweep="w_um=10:12:1")
        assert [p["w_um"] for p in cfg.points()] == [10.0, 11.0, 12.0]

    def test_hash_ignores_output_path(self):
        """The output path does not change the config hash."""
        assert build_run_config(out="a.csv").sha256 == build_run_config(out="b.csv").sha256

    def test_gap_map_needs_corners(self):
        """A gap map needs all four corner gaps."""
        with pytest.raises(ConfigError):
            build_run_config().gap_map()


class TestLoadRunConfig:
    def test_reads_json(self, tmp_path):
        """Values are read from a JSON file."""
        path = tmp_path / "chip.json"
        path.write_text(json.dumps({"h_s_um": 9.0, "facing": "dielectric"}))
        cfg = load_run_config(path)
        assert cfg.section().h_s == 9.0
        assert cfg.section().facing is Facing.DIELECTRIC

    def test_invalid_json(self, tmp_path):
        """Malformed JSON is a ConfigError."""
        path = tmp_path / "chip.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_run_config(path)
