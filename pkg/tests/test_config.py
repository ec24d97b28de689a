"""
Tests for runtime settings and campaign configuration parsing.
"""

import json

import pytest

from config import (
    DEFAULT_DETECTORS,
    Config,
    ConfigurationError,
    load_config_file,
    parse_config,
    scenario_to_config,
)
from models.schemas import DetectorId, ScenarioName


class TestConfigFromEnv:
    """Tests for Config.from_env."""

    def test_defaults(self, monkeypatch):
        """Unset variables give the defaults."""
        for name in ("HETERODET_THREADS", "HETERODET_LOG_LEVEL", "HETERODET_LOG_JSON", "HETERODET_OUT_DIR"):
            monkeypatch.delenv(name, raising=False)
        config = Config.from_env()
        assert config.threads == 0
        assert config.log_level == "INFO"
        assert config.log_json is False
        assert config.out_dir == "results"
        assert config.workers >= 1

    def test_values_are_read(self, monkeypatch):
        """Every variable is honoured."""
        monkeypatch.setenv("HETERODET_THREADS", "3")
        monkeypatch.setenv("HETERODET_LOG_LEVEL", "debug")
        monkeypatch.setenv("HETERODET_LOG_JSON", "yes")
        monkeypatch.setenv("HETERODET_OUT_DIR", "/tmp/campaigns")
        config = Config.from_env()
        assert config.workers == 3
        assert config.log_level == "DEBUG"
        assert config.log_json is True
        assert config.out_dir == "/tmp/campaigns"

    @pytest.mark.parametrize("name,value", [
        ("HETERODET_THREADS", "many"),
        ("HETERODET_THREADS", "-2"),
        ("HETERODET_LOG_LEVEL", "LOUD"),
        ("HETERODET_LOG_JSON", "maybe"),
    ])
    def test_invalid_values_raise(self, monkeypatch, name, value):
        """Malformed variables are configuration errors."""
        monkeypatch.setenv(name, value)
        with pytest.raises(ConfigurationError, match=name):
            Config.from_env()


class TestLoadConfigFile:
    """Tests for load_config_file."""

    def test_reads_object(self, tmp_path):
        """A JSON object is returned as a dict."""
        path = tmp_path / "campaign.json"
        path.write_text(json.dumps({"scenario": "HE", "trials": 5}))
        assert load_config_file(path) == {"scenario": "HE", "trials": 5}

    def test_missing_file(self, tmp_path):
        """A missing file is a configuration error."""
        with pytest.raises(ConfigurationError, match="cannot read config"):
            load_config_file(tmp_path / "absent.json")

    def test_not_an_object(self, tmp_path):
        """Top-level arrays are rejected."""
        path = tmp_path / "campaign.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigurationError, match="JSON object"):
            load_config_file(path)


class TestParseConfig:
    """Tests for parse_config."""

    def test_preset_at_desk_scale(self):
        """Desk scale caps K at 100 and trials at 500."""
        manifest, scenario = parse_config({"scenario": "HE"}, full_scale=False)
        assert scenario.name is ScenarioName.HE
        assert scenario.noise.group_sizes == (100,)
        assert scenario.trials == 500
        assert manifest.detectors == DEFAULT_DETECTORS
        assert manifest.out_dir == "results"

    def test_preset_at_full_scale(self):
        """Full scale keeps K=500 and 2000 trials."""
        _, scenario = parse_config({"scenario": "he"})
        assert scenario.noise.group_sizes == (500,)
        assert scenario.trials == 2000

    def test_overrides(self):
        """Explicit keys replace preset values."""
        manifest, scenario = parse_config({
            "scenario": "NSPHE",
            "k": 60,
            "trials": 7,
            "seed": 99,
            "snr_db": 3.5,
            "eta": 5e-5,
            "detectors": "amf, hetero",
            "out_dir": "elsewhere",
        })
        assert scenario.noise.group_sizes == (30, 30)
        assert scenario.noise.group_scales == (5.0, 15.0)
        assert scenario.trials == 7
        assert scenario.seed == 99 and manifest.seed == 99
        assert scenario.snr_db == 3.5
        assert scenario.admm.eta == 5e-5
        assert manifest.detectors == (DetectorId.AMF, DetectorId.HETERO_GLRT)
        assert manifest.out_dir == "elsewhere"
        assert manifest.overrides["k"] == 60

    def test_custom_scenario(self):
        """CUSTOM builds everything from the given keys."""
        _, scenario = parse_config({
            "scenario": "CUSTOM", "n": 6, "p": 2, "t": 1, "k": 30, "sigma2_test": 2.0, "snr_db": 5,
        })
        assert scenario.subspace.n == 6
        assert scenario.noise.group_sizes == (30,)
        assert scenario.noise.group_scales == (1.0,)
        assert scenario.trials == 500

    def test_custom_missing_keys(self):
        """CUSTOM names every missing key."""
        with pytest.raises(ConfigurationError, match="missing required keys for CUSTOM: p, t, sigma2_test, snr_db, k"):
            parse_config({"scenario": "CUSTOM", "n": 6})

    @pytest.mark.parametrize("data,message", [
        ({"trials": 5}, "missing required key: scenario"),
        ({"scenario": "XYZ"}, "Unknown scenario name"),
        ({"scenario": "HE", "colour": "blue"}, "unknown config keys: colour"),
        ({"scenario": "HE", "trials": 0}, "trials must be a positive integer"),
        ({"scenario": "HE", "eta": -1.0}, "eta must be positive"),
        ({"scenario": "HE", "epsilon": -0.1}, "epsilon must be non-negative"),
        ({"scenario": "HE", "seed": -1}, "seed must be an unsigned 64-bit integer"),
        ({"scenario": "HE", "decay": 1.5}, "decay must lie in"),
        ({"scenario": "HE", "detectors": ["amf", "cfar"]}, "Unknown detector name"),
        ({"scenario": "HE", "detectors": []}, "detectors must be a non-empty list"),
        ({"scenario": "HE", "format_version": "2"}, "unsupported format_version"),
        ({"scenario": "NSPHE", "group_sizes": [10, 20], "k": 40}, "group_sizes sum to 30"),
        ({"scenario": "NSPHE", "group_sizes": [10, 20, 30]}, "set group_scales"),
        ({"scenario": "HE", "p": 3, "t": 2}, "invalid configuration"),
    ])
    def test_invalid_configs(self, data, message):
        """Invalid configurations raise with a clear message."""
        with pytest.raises(ConfigurationError, match=message):
            parse_config(data)

    def test_reads_file(self, tmp_path):
        """A path is loaded as JSON."""
        path = tmp_path / "campaign.json"
        path.write_text(json.dumps({"scenario": "PHE", "trials": 3}))
        _, scenario = parse_config(str(path))
        assert scenario.name is ScenarioName.PHE
        assert scenario.trials == 3

    @pytest.mark.parametrize("name", ["HE", "PHE", "NSPHE", "HET"])
    def test_resolved_config_round_trips(self, name):
        """Parsing scenario_to_config output gives back the same scenario."""
        manifest, scenario = parse_config({"scenario": name, "trials": 11}, full_scale=False)
        resolved = scenario_to_config(scenario, manifest.detectors, manifest.out_dir)
        manifest2, scenario2 = parse_config(json.loads(json.dumps(resolved)))
        assert scenario2 == scenario
        assert manifest2.detectors == manifest.detectors
        assert scenario_to_config(scenario2, manifest2.detectors, manifest2.out_dir) == resolved
