"""Tests for configuration loading, precedence and validation."""

import pytest

from noisegate import config
from noisegate.discretize import ThresholdMethod
from noisegate.errors import ConfigError
from noisegate.learners import ClassifierKind


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv(config.SEED_ENV, raising=False)


class TestDefaults:

    def test_default_run_config(self):
        cfg = config.RunConfig.from_mapping(config.load_config())
        assert cfg.threshold_method is ThresholdMethod.MEDIAN
        assert cfg.cutpoint is None
        assert cfg.step_size_pct == 5.0
        assert cfg.extremes_fraction == 0.10
        assert cfg.classifiers == (ClassifierKind.RANDOM_FOREST,)
        assert cfg.n_boot == 100
        assert cfg.top_k == 3
        assert cfg.over_sample_pcts == (0, 100, 200, 300)
        assert cfg.seed == 0
        assert cfg.output_dir == "noisegate-out"

    def test_to_dict_reloads_to_the_same_config(self):
        cfg = config.RunConfig.from_mapping(config.load_config(overrides={"learner": {"classifier": "all"}}))
        assert config.RunConfig.from_mapping(cfg.to_dict()) == cfg


class TestPrecedence:

    def test_env_seed(self, monkeypatch):
        monkeypatch.setenv(config.SEED_ENV, "7")
        assert config.load_config()["runtime"]["seed"] == 7

    def test_flag_beats_env(self, monkeypatch):
        monkeypatch.setenv(config.SEED_ENV, "7")
        data = config.load_config(overrides={"runtime": {"seed": 3}})
        assert data["runtime"]["seed"] == 3

    def test_bad_env_seed(self, monkeypatch):
        monkeypatch.setenv(config.SEED_ENV, "abc")
        with pytest.raises(ConfigError):
            config.load_config()

    def test_yaml_file_then_overrides(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("discretization:\n  step_size: 2.5\n  cutpoint: 4.0\nbootstrap:\n  n_boot: 20\n")
        data = config.load_config(path, {"bootstrap": {"n_boot": 5}, "discretization": {"cutpoint": None}})
        cfg = config.RunConfig.from_mapping(data)
        assert cfg.step_size_pct == 2.5
        assert cfg.cutpoint == 4.0
        assert cfg.n_boot == 5

    def test_toml_file(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('[learner]\nclassifier = "lr,knn"\n\n[runtime]\njobs = 2\n')
        cfg = config.RunConfig.from_mapping(config.load_config(path))
        assert cfg.classifiers == (ClassifierKind.LOGISTIC_REGRESSION, ClassifierKind.KNN)
        assert cfg.jobs == 2


class TestValidation:

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            config.load_config(tmp_path / "absent.yaml")

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("bootstrap:\n  iterations: 10\n")
        with pytest.raises(ConfigError):
            config.load_config(path)

    @pytest.mark.parametrize("overrides", [
        {"discretization": {"step_size": 0}},
        {"discretization": {"extremes": 0.5}},
        {"discretization": {"threshold_method": "otsu"}},
        {"bootstrap": {"measure": "kappa"}},
        {"interpretation": {"top_k": 0}},
        {"runtime": {"jobs": 0}},
    ])
    def test_out_of_range(self, overrides):
        with pytest.raises(ConfigError):
            config.load_config(overrides=overrides)

    def test_unknown_classifier(self):
        with pytest.raises(ConfigError):
            config.RunConfig.from_mapping(config.load_config(overrides={"learner": {"classifier": "svm"}}))

    def test_threshold_alias(self):
        cfg = config.RunConfig.from_mapping(
            config.load_config(overrides={"discretization": {"threshold_method": "rtt"}})
        )
        assert cfg.threshold_method is ThresholdMethod.CART
