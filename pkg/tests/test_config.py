"""Tests for run-config parsing and its strict key policy."""

import json

import numpy as np
import pytest

from se2gp.config import ConfigError, load_run_config, parse_run_config


def minimal_config() -> dict:
    return {
        "depth": 1,
        "widths": [1, 4],
        "filter_modes": [1],
        "sigma_w_sq": 2.0,
        "radial_grid": {"count": 4, "p_max": 3.0},
        "seed": 11,
        "input": {
            "rep_index": 0,
            "window": [-1, 1],
            "modes": [{"channel": 0, "mode": 0,
                       "profile": {"kind": "constant", "value": 1.0}}],
        },
    }


def write(tmp_path, payload) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


class TestParsing:
    def test_minimal_config(self, tmp_path):
        run = load_run_config(write(tmp_path, minimal_config()))
        assert run.network.depth == 1
        assert run.network.widths == (1, 4)
        assert run.network.grid.count == 4
        assert run.input_field.window == (-1, 1)
        assert np.allclose(run.input_field.mode_values(0), 1.0)
        assert run.kernel is None and run.converge is None

    def test_explicit_grid_values(self):
        payload = minimal_config()
        payload["radial_grid"] = {"values": [0.5, 1.0, 2.0]}
        run = parse_run_config(payload)
        assert np.allclose(run.network.grid.values, [0.5, 1.0, 2.0])

    def test_all_sections(self, tmp_path):
        payload = minimal_config()
        payload["kernel"] = {"layer": 1, "draws": 10, "emit": "both"}
        payload["converge"] = {"widths": [2, 4], "draws": 5, "seeds": [1],
                               "layer": 1, "sigma_mult": 4.0, "workers": 1}
        payload["check"] = {
            "rotation_trials": 2, "rotation_tol": 1e-10,
            "translation": [0.1, 0.2], "translation_tol": 1e-10,
            "oracle_tol": 1e-10, "constraint_trials": 10,
            "constraint_tol": 1e-12, "moment_draws": 1000,
            "moment_sigma_mult": 5.0}
        payload["sample_gp"] = {"channels": 3, "count": 2}
        payload["filter_check"] = {
            "trials": 10, "rho_in": 0, "rho_out": 1,
            "profile": {"kind": "gaussian", "amplitude": 1.0, "center": 0.5,
                        "width": 0.4}}
        run = load_run_config(write(tmp_path, payload))
        assert run.kernel.emit == "both"
        assert run.converge.widths == (2, 4)
        assert run.check.moment_draws == 1000
        assert run.sample_gp.count == 2
        assert run.filter_check.tolerance == 1e-12

    def test_seed_override(self):
        run = parse_run_config(minimal_config(), seed_override=999)
        assert run.network.seed == 999

    def test_final_linear_lengths(self):
        payload = minimal_config()
        payload["final_linear"] = True
        payload["widths"] = [1, 4, 2]
        payload["filter_modes"] = [1, 0]
        run = parse_run_config(payload)
        assert run.network.n_linear == 2


class TestStrictness:
    def test_unknown_top_level_key(self):
        payload = minimal_config()
        payload["typo_key"] = 1
        with pytest.raises(ConfigError, match="typo_key"):
            parse_run_config(payload)

    def test_unknown_nested_key(self):
        payload = minimal_config()
        payload["radial_grid"]["pmax"] = 2.0
        del payload["radial_grid"]["p_max"]
        with pytest.raises(ConfigError, match="pmax"):
            parse_run_config(payload)

    def test_unknown_profile_key(self):
        payload = minimal_config()
        payload["input"]["modes"][0]["profile"]["widht"] = 3
        with pytest.raises(ConfigError, match="widht"):
            parse_run_config(payload)

    def test_missing_required_key(self):
        payload = minimal_config()
        del payload["sigma_w_sq"]
        with pytest.raises(ConfigError, match="sigma_w_sq"):
            parse_run_config(payload)

    def test_widths_length_mismatch_names_widths(self):
        payload = minimal_config()
        payload["widths"] = [1, 4, 4]
        with pytest.raises(ConfigError, match="widths"):
            parse_run_config(payload)

    def test_mode_outside_window_rejected(self):
        payload = minimal_config()
        payload["input"]["modes"][0]["mode"] = 7
        with pytest.raises(ConfigError, match="window"):
            parse_run_config(payload)

    def test_unknown_profile_kind(self):
        payload = minimal_config()
        payload["input"]["modes"][0]["profile"] = {"kind": "sinc"}
        with pytest.raises(ConfigError, match="sinc"):
            parse_run_config(payload)

    def test_bad_emit_value(self):
        payload = minimal_config()
        payload["kernel"] = {"layer": 1, "draws": 5, "emit": "pretty"}
        with pytest.raises(ConfigError, match="emit"):
            parse_run_config(payload)

    def test_converge_layer_range(self):
        payload = minimal_config()
        payload["converge"] = {"widths": [2], "draws": 5, "seeds": [1],
                               "layer": 2}
        with pytest.raises(ConfigError, match="layer"):
            parse_run_config(payload)

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config("/nonexistent/config.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_run_config(str(path))
