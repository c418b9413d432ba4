import json

import pytest

from bodycomp.config import ConfigError, RunConfig, apply_overrides, config_from_dict, load_config
from bodycomp.dataset import SplitSpec
from bodycomp.nnet import ArchitectureSpec, TrainConfig
from bodycomp.preprocess import PreprocessConfig
from bodycomp.synthetic import GeneratorConfig


def test_defaults_match_module_defaults():
    cfg = RunConfig()
    assert cfg.generator == GeneratorConfig()
    assert cfg.preprocess == PreprocessConfig()
    assert cfg.model == ArchitectureSpec()
    assert cfg.train == TrainConfig()
    assert cfg.split == SplitSpec()
    assert cfg.baselines["random_forest"] == {"n_trees": 200, "max_depth": 8, "min_leaf": 5, "seed": 0}
    assert cfg.baselines["gradient_boost"]["n_rounds"] == 300
    assert cfg.baselines["svr"]["epsilon"] == 0.1


def test_dict_round_trip():
    cfg = RunConfig()
    assert config_from_dict(json.loads(cfg.to_json())) == cfg


@pytest.mark.parametrize(
    "data, key",
    [
        ({"bogus": 1}, "bogus"),
        ({"train": {"epoch": 3}}, "train.epoch"),
        ({"generator": {"calibration": {"x": 1}}}, "generator.calibration.x"),
        ({"baselines": {"svm": {}}}, "baselines.svm"),
        ({"baselines": {"svr": {"kernel": "rbf"}}}, "baselines.svr.kernel"),
    ],
)
def test_unknown_keys_rejected(data, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        config_from_dict(data)


def test_invalid_value_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"generator": {"n_subjects": 0}})


def test_overrides_parse_json_values():
    data = apply_overrides({}, ["train.epochs=5", "model.conv_channels=[4,8,16]", "paths.output_dir=runs/x"])
    cfg = config_from_dict(data)
    assert cfg.train.epochs == 5
    assert cfg.model.conv_channels == (4, 8, 16)
    assert cfg.paths.output_dir == "runs/x"


def test_override_beats_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"train": {"epochs": 9, "seed": 4}}))
    cfg = load_config(str(path), ["train.epochs=2"])
    assert (cfg.train.epochs, cfg.train.seed) == (2, 4)


def test_bad_override_syntax():
    with pytest.raises(ConfigError):
        apply_overrides({}, ["train.epochs"])


def test_bad_json_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{")
    with pytest.raises(ConfigError):
        load_config(str(path))
