"""Run configuration: one JSON document, dot-path overrides, unknown keys rejected."""

import copy
import dataclasses
import json
from dataclasses import dataclass, field

from .dataset import SplitSpec
from .nnet.model import ArchitectureSpec
from .nnet.train import TrainConfig
from .preprocess import PreprocessConfig
from .synthetic import GeneratorConfig


class ConfigError(ValueError):
    pass


def default_baselines():
    return {
        "svr": {"c": 1.0, "epsilon": 0.1, "epochs": 50, "lr": 0.01, "seed": 0},
        "random_forest": {"n_trees": 200, "max_depth": 8, "min_leaf": 5, "seed": 0},
        "gradient_boost": {"n_rounds": 300, "learning_rate": 0.05, "max_depth": 3, "min_leaf": 5},
    }


@dataclass
class Paths:
    dataset_csv: str = "data/dataset.csv"
    output_dir: str = "runs/default"
    model_file: str = "model.bin"


@dataclass
class RunConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    model: ArchitectureSpec = field(default_factory=ArchitectureSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    baselines: dict = field(default_factory=default_baselines)
    split: SplitSpec = field(default_factory=SplitSpec)
    paths: Paths = field(default_factory=Paths)

    def to_dict(self):
        return _to_plain(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(path + k for k in unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        current = getattr(defaults, name)
        key = f"{path}{name}"
        if dataclasses.is_dataclass(current):
            kwargs[name] = _build(type(current), value, key + ".")
        elif name == "baselines" and cls is RunConfig:
            kwargs[name] = _build_baselines(value, key + ".")
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path.rstrip('.') or 'config'}: {exc}") from None


def _build_baselines(data, path):
    out = default_baselines()
    if not isinstance(data, dict):
        raise ConfigError(f"{path.rstrip('.')}: expected an object")
    for kind, hyper in data.items():
        if kind not in out:
            raise ConfigError(f"unknown key {path}{kind}")
        unknown = sorted(set(hyper) - set(out[kind]))
        if unknown:
            raise ConfigError(f"unknown key(s) {', '.join(f'{path}{kind}.{k}' for k in unknown)}")
        out[kind].update(hyper)
    return out


def config_from_dict(data):
    return _build(RunConfig, data, "")


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data, overrides):
    """Apply ``key.path=value`` strings to a plain config dict (values parsed as JSON if possible)."""
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key.path=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {p} is not a section")
        node[parts[-1]] = _parse_value(raw)
    return data


def load_config(path=None, overrides=()):
    data = {}
    if path:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(apply_overrides(data, overrides))
