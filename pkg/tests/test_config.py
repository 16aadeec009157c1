from pathlib import Path

import pytest
import yaml

from config.experiment import (
    ESTCConfig,
    VBTSConfig,
    dump_config,
    load_config,
    parse_config,
    parse_value,
    with_override,
)
from models.vb_spike_slab import ConstantLambda, PracticalSqrt, TheoryLambda
from utils.errors import ConfigurationError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "data" / "configs"


class TestParsing:
    def test_quick_config(self, quick_config):
        assert quick_config.env.dim == 8
        assert quick_config.labels == ["vbts", "lints", "oracle", "uniform"]
        assert isinstance(quick_config.policies[0], VBTSConfig)
        assert quick_config.n_jobs == 1
        assert quick_config.common_environment

    def test_unknown_key_is_rejected(self, quick_config_data):
        quick_config_data["env"]["rhoo"] = 0.2
        with pytest.raises(ConfigurationError, match="rhoo"):
            parse_config(quick_config_data)

    def test_unknown_policy(self, quick_config_data):
        quick_config_data["policies"].append({"policy": "exp4"})
        with pytest.raises(ConfigurationError):
            parse_config(quick_config_data)

    def test_duplicate_labels(self, quick_config_data):
        quick_config_data["policies"].append({"policy": "lints", "scale": 0.1})
        with pytest.raises(ConfigurationError, match="duplicated: lints"):
            parse_config(quick_config_data)
        quick_config_data["policies"][-1]["label"] = "lints_small"
        assert parse_config(quick_config_data).labels[-1] == "lints_small"

    def test_sparsity_above_dim(self, quick_config_data):
        quick_config_data["env"]["sparsity"] = 9
        with pytest.raises(ConfigurationError):
            parse_config(quick_config_data)

    def test_dataset_needs_path(self, quick_config_data):
        quick_config_data["env"]["kind"] = "dataset"
        with pytest.raises(ConfigurationError, match="dataset_path"):
            parse_config(quick_config_data)

    def test_range_checks(self, quick_config_data):
        quick_config_data["env"]["rho"] = 1.0
        with pytest.raises(ConfigurationError):
            parse_config(quick_config_data)

    def test_lambda_schedules(self):
        assert VBTSConfig().schedule() == ConstantLambda(1.0)
        assert VBTSConfig(lambda_mode="practical", lambda_star=0.4).schedule() == PracticalSqrt(0.4)
        assert isinstance(VBTSConfig(lambda_mode="theory").schedule(), TheoryLambda)

    def test_default_explore_len_is_unset(self):
        assert ESTCConfig().explore_len is None


class TestFiles:
    def test_yaml_round_trip(self, quick_config, tmp_path):
        path = dump_config(quick_config, tmp_path / "nested" / "config.yaml")
        assert load_config(path) == quick_config

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "absent.yaml")

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError, match="mapping"):
            load_config(path)

    def test_broken_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("env: [unclosed\n")
        with pytest.raises(ConfigurationError, match="could not parse"):
            load_config(path)

    @pytest.mark.parametrize("name", ["quick", "equicorrelated", "autoregressive", "mimic"])
    def test_shipped_configs_validate(self, name):
        config = load_config(CONFIG_DIR / f"{name}.yaml")
        assert config.policies

    def test_equicorrelated_setup(self):
        path = CONFIG_DIR / "equicorrelated.yaml"
        config = load_config(path)
        raw = yaml.safe_load(path.read_text())
        assert config.env.dim == raw["env"]["dim"] == 100
        assert config.env.num_arms == 5

    def test_mimic_pins_reference_sparsity(self):
        config = load_config(CONFIG_DIR / "mimic.yaml")
        assert config.env.kind == "dataset"
        assert config.env.reference_sparsity == 18


class TestOverrides:
    def test_env_field(self, quick_config):
        updated = with_override(quick_config, "env.rho", 0.5)
        assert updated.env.rho == 0.5
        assert quick_config.env.rho == 0.3

    def test_top_level_field(self, quick_config):
        assert with_override(quick_config, "horizon", 40).horizon == 40

    def test_policy_by_label_and_index(self, quick_config):
        by_label = with_override(quick_config, "policies.lints.scale", 0.25)
        assert by_label.policies[1].scale == 0.25
        by_index = with_override(quick_config, "policies.0.refit_every", 4)
        assert by_index.policies[0].refit_every == 4

    def test_bare_policy_field(self, quick_config):
        updated = with_override(quick_config, "lambda_star", 0.2)
        assert updated.policies[0].lambda_star == 0.2

    def test_invalid_values_and_keys(self, quick_config):
        with pytest.raises(ConfigurationError):
            with_override(quick_config, "env.rho", 2.0)
        with pytest.raises(ConfigurationError, match="unknown config key"):
            with_override(quick_config, "env.nothing", 1)
        with pytest.raises(ConfigurationError, match="unknown config key"):
            with_override(quick_config, "nothing", 1)
        with pytest.raises(ConfigurationError, match="no policy block"):
            with_override(quick_config, "policies.linucb.alpha", 1.0)


@pytest.mark.parametrize(
    "text, expected",
    [("0.3", 0.3), ("12", 12), ("true", True), ("theory", "theory"), ("[1, 2]", [1, 2])],
)
def test_parse_value(text, expected):
    assert parse_value(text) == expected
