import json

import pytest

from eelab.cli import main
from eelab.config import load_config, validate_config
from eelab.errors import ConfigError


def write_config(tmp_path, obj, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


class TestLoadConfig:
    def test_minimal_q4_fills_defaults(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "q4"})
        cfg = load_config(path)
        assert cfg.q4["alpha"] == 0.5
        assert cfg.q4["coarse_cells"] == 8
        assert cfg.model["kind"] == "double_well_grid"

    def test_negative_temperature_names_key_path(self, tmp_path):
        path = write_config(tmp_path, {
            "experiment": "run",
            "ladder": {"temperatures": [1.0, -2.0]},
        })
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "ladder.temperatures[1]" in str(err.value)

    def test_unknown_key_rejected_with_path(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "q4",
                                       "ladder": {"bogus_knob": 3}})
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "ladder.bogus_knob" in str(err.value)

    def test_unknown_top_level_key(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "q4", "bogus": 1})
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "bogus" in str(err.value)

    def test_round_trip_identity(self, tmp_path):
        path = write_config(tmp_path, {
            "experiment": "q1",
            "seed": 99,
            "replicates": 5,
            "model": {"kind": "energy_table", "energies": [0.0, 1.0, 0.5]},
            "ladder": {"p_jump": 0.25, "macro_steps": 1234},
        })
        cfg = load_config(path)
        path2 = write_config(tmp_path, cfg.to_dict(), "echo.json")
        cfg2 = load_config(path2)
        assert cfg == cfg2

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/config.json")

    def test_parse_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_experiment_mismatch(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "q1"})
        with pytest.raises(ConfigError):
            load_config(path, experiment="q2")

    def test_model_param_errors_surface_at_load(self, tmp_path):
        path = write_config(tmp_path, {
            "experiment": "run",
            "model": {"kind": "table", "weights": [1.0, -1.0]},
        })
        with pytest.raises(ConfigError):
            load_config(path)


class TestCliExitCodes:
    def test_success_is_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "experiment": "run",
            "ladder": {"macro_steps": 200, "burn_in": 10},
            "model": {"kind": "energy_table", "energies": [0.0, 1.0]},
        })
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "out" / "DONE").exists()

    def test_config_error_is_one(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"experiment": "run", "bogus": True})
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_refusal_to_overwrite_is_one_and_force_clears(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "experiment": "run",
            "ladder": {"macro_steps": 100},
            "model": {"kind": "energy_table", "energies": [0.0, 1.0]},
        })
        out = str(tmp_path / "out")
        assert main(["run", "--config", str(cfg), "--out", out]) == 0
        assert main(["run", "--config", str(cfg), "--out", out]) == 1
        assert main(["run", "--config", str(cfg), "--out", out, "--force"]) == 0

    def test_runtime_error_is_two(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "experiment": "segment",
            "segmentation": {"image": {"kind": "pgm",
                                       "path": str(tmp_path / "missing.pgm")}},
        })
        code = main(["segment", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
        assert code == 2

    def test_seed_override(self, tmp_path):
        cfg = write_config(tmp_path, {
            "experiment": "run", "seed": 1,
            "ladder": {"macro_steps": 50},
            "model": {"kind": "energy_table", "energies": [0.0, 1.0]},
        })
        assert main(["run", "--config", str(cfg), "--seed", "2",
                     "--out", str(tmp_path / "out")]) == 0
        meta = json.loads((tmp_path / "out" / "metadata.json").read_text())
        assert meta["seed"] == 2


class TestArtifacts:
    def test_empty_trace_writes_header_only_csv_and_sentinel(self, tmp_path):
        cfg = validate_config({
            "experiment": "run",
            "ladder": {"macro_steps": 0},
            "model": {"kind": "energy_table", "energies": [0.0, 1.0]},
        })
        from eelab.experiments import run_experiment

        out = run_experiment(cfg, out_dir=tmp_path / "out")
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines == ["step,level,state_id,energy,ring,move_type,accepted"]
        assert (out / "DONE").exists()

    def test_trace_rows_match_schema_width(self, tmp_path):
        cfg = validate_config({
            "experiment": "run",
            "ladder": {"macro_steps": 60, "burn_in": 5},
            "model": {"kind": "energy_table", "energies": [0.0, 0.5, 1.0]},
        })
        from eelab.experiments import run_experiment

        out = run_experiment(cfg, out_dir=tmp_path / "out")
        lines = (out / "trace.csv").read_text().splitlines()
        width = len(lines[0].split(","))
        assert all(len(line.split(",")) == width for line in lines)
        assert len(lines) == 1 + 60 * 2  # header + M rows per level

    def test_rerun_is_byte_identical(self, tmp_path):
        raw = {
            "experiment": "q3",
            "seed": 12,
            "replicates": 3,
            "q3": {"ledger_sizes": [50, 200]},
            "model": {"kind": "energy_table",
                      "energies": [0.0, 2.0, 0.5, 3.0, 1.0]},
            "ladder": {"truncation_min": 0.5},
        }
        from eelab.experiments import run_experiment

        out_a = run_experiment(validate_config(raw), out_dir=tmp_path / "a")
        out_b = run_experiment(validate_config(raw), out_dir=tmp_path / "b")
        for name in ("ledger_bias.csv", "summary.json", "metadata.json", "DONE"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_empty_ledger_records_all_fallback_jumps(self, tmp_path):
        cfg = validate_config({
            "experiment": "q1",
            "seed": 3,
            "replicates": 2,
            "model": {"kind": "energy_table",
                      "energies": [0.0, 2.0, 0.5, 3.0, 1.0]},
            "ladder": {"macro_steps": 300, "burn_in": 0, "p_jump": 1.0,
                       "max_records": 0},
        })
        from eelab.experiments import run_experiment

        out = run_experiment(cfg, out_dir=tmp_path / "out")
        summary = json.loads((out / "summary.json").read_text())
        for variant in ("restricted", "unrestricted"):
            assert summary[variant]["mean_fallback_share"] == 1.0

    def test_q4_on_two_state_instance_emits_canonical_eigenvalue(self, tmp_path):
        """Target (3/4, 1/4) with the truncation above both energies makes
        the flattened proposal uniform; lambda2 must come out 1/3 and the
        alternate bound must be the matching one."""
        cfg = validate_config({
            "experiment": "q4",
            "model": {"kind": "table", "weights": [3.0, 1.0]},
            "ladder": {"temperatures": [1.0, 4.0], "truncations": [1.2]},
            "q4": {"coarse_cells": 2},
        })
        from eelab.experiments import run_experiment

        out = run_experiment(cfg, out_dir=tmp_path / "out")
        reports = json.loads((out / "spectral_reports.json").read_text())
        assert abs(reports["mis"]["lambda2"] - 1.0 / 3.0) <= 1e-9
        assert reports["mis"]["matched_bound"] == "alternate"

    def test_metadata_carries_version_and_config_echo(self, tmp_path):
        cfg = validate_config({"experiment": "spectral", "seed": 4})
        from eelab.experiments import run_experiment
        from eelab import __version__

        out = run_experiment(cfg, out_dir=tmp_path / "out")
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["version"] == __version__
        assert meta["config"]["experiment"] == "spectral"
        assert meta["seed"] == 4
