"""Runner: config validation, exit codes, artifacts, determinism."""

import json

import pytest

from gibbslab import cli
from gibbslab.errors import ConfigError


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


SMALL_FIXED_POINT = {
    "experiment": "fixed_point",
    "seed": 1,
    "models": [{"kind": "tfim", "n1": 1, "n2": 2, "v": 1.0}],
    "betas": [1.0],
    "filter": "metropolis",
}


class TestValidation:
    def test_missing_seed_is_named(self):
        with pytest.raises(ConfigError, match="seed"):
            cli.validate_config({"experiment": "resource"})

    def test_unknown_key_rejected(self):
        config = dict(SMALL_FIXED_POINT, extra_knob=3)
        with pytest.raises(ConfigError, match="extra_knob"):
            cli.validate_config(config)

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigError):
            cli.validate_config({"experiment": "warp", "seed": 1})

    def test_tolerance_range(self):
        config = {
            "experiment": "end_to_end",
            "seed": 1,
            "model": {"kind": "tfim", "n1": 1, "n2": 2, "v": 1.0},
            "promise": {"n": 3, "r": 2, "branch": "L"},
            "t": 1.0,
            "tolerances": {"delta_sup": 2.0},
        }
        with pytest.raises(ConfigError, match="delta_sup"):
            cli.validate_config(config)

    def test_oversized_promise_diagnosed(self):
        config = {
            "experiment": "end_to_end",
            "seed": 1,
            "model": {"kind": "tfim", "n1": 1, "n2": 2, "v": 1.0},
            "promise": {"n": 14, "r": 6, "branch": "L"},
            "t": 1.0,
        }
        notes = cli.validate_config(config)
        assert any("SizeExceeded" in note for note in notes)

    def test_valid_config_reports_dimension(self):
        notes = cli.validate_config(
            {
                "experiment": "adversarial",
                "seed": 1,
                "q": 4,
                "n": 3,
            }
        )
        assert any("superoperator dimension: 256" in note for note in notes)


class TestRun:
    def test_malformed_config_exit_3(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert cli.run(path, out_dir=tmp_path / "out") == 3
        assert not (tmp_path / "out").exists()

    def test_fixed_point_run(self, tmp_path):
        path = write_config(tmp_path, SMALL_FIXED_POINT)
        out = tmp_path / "out"
        assert cli.run(path, out_dir=out) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert all(check["passed"] for check in manifest["checks"])
        body = (out / "fixed_point.csv").read_text().splitlines()
        assert body[0].startswith("model,dim,params,beta,filter,residual,kernel_dim")
        assert len(body) == 2

    def test_resource_run(self, tmp_path):
        config = {
            "experiment": "resource", "seed": 1, "n": 4, "r": 3,
            "gamma": 0.1, "t": 1.0, "delta_L": 1e-3, "beta": 1.0, "eps": 0.5,
        }
        out = tmp_path / "out"
        assert cli.run(write_config(tmp_path, config), out_dir=out) == 0
        rows = (out / "resource.csv").read_text().splitlines()
        assert rows[1].split(",")[3] == "4"  # suggested_n = log2(16)

    def test_adversarial_determinism(self, tmp_path):
        config = {
            "experiment": "adversarial", "seed": 3, "q": 3, "n": 2,
            "alpha_grid": [0.0, 1.0], "m_med_grid": [1, 3], "beta": 2.0,
        }
        path = write_config(tmp_path, config)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.run(path, out_dir=out) == 0
            outs.append((out / "adversarial.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_end_to_end_run(self, tmp_path):
        config = {
            "experiment": "end_to_end",
            "seed": 11,
            "model": {"kind": "tfim", "n1": 1, "n2": 2, "v": 1.0},
            "beta": 1.0,
            "promise": {"n": 2, "r": 1, "branch": "L"},
            "gamma": 0.05,
            "mode": "exact",
            "t": 40.0,
            "tolerances": {"delta_sup": 1e-3, "delta_fail": 1e-2},
        }
        out = tmp_path / "out"
        assert cli.run(write_config(tmp_path, config), out_dir=out) == 0
        body = (out / "end_to_end.csv").read_text().splitlines()
        assert len(body) == 2

    def test_threaded_sweep_matches_serial(self, tmp_path):
        config = {
            "experiment": "ensemble", "seed": 40, "dim": 8,
            "model_seeds": {"count": 6, "base_seed": 40},
            "n_grid": [3], "r_grid": [2], "betas": [1.0], "branches": ["L"],
        }
        path = write_config(tmp_path, config)
        bodies = []
        for name, threads in (("serial", 1), ("threaded", 3)):
            out = tmp_path / name
            assert cli.run(path, out_dir=out, threads=threads) == 0
            bodies.append((out / "ensemble.csv").read_bytes())
        assert bodies[0] == bodies[1]

    def test_main_entrypoint(self, tmp_path, capsys):
        path = write_config(tmp_path, SMALL_FIXED_POINT)
        code = cli.main(["run", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        assert "[PASS]" in capsys.readouterr().out

    def test_validate_entrypoint(self, tmp_path, capsys):
        path = write_config(tmp_path, SMALL_FIXED_POINT)
        assert cli.main(["validate", str(path)]) == 0
        assert "ok" in capsys.readouterr().out
