"""Experiment configuration: a JSON document with one object per section.

Keys::

    data        count, r_min, r_max, x1, length, train_count, split_seed
    model       num_qubits, offset, slope
    training    learning_rate, epochs, lambda, adam_beta1, adam_beta2,
                adam_epsilon, batch_size, seed, encoding_trainable,
                gradient_method, probe_count, probe_radius
    robustness  epsilon_grid, perturbation_rounds, seeds, lambda_values,
                include_fixed_encoding, perturbation_seed
    sweep       lambda_grid, seeds
    bifurcation r_min, r_max, num_r, iterations, x1
    workers     integer, size of the process pool for training jobs

Every section and key is optional; missing values take the desk-scale
defaults below. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .harness import RobustnessConfig, SweepConfig
from .training import TrainingConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    count: int = 500
    r_min: float = 3.5
    r_max: float = 4.0
    x1: float = 0.5
    length: int = 12
    train_count: int = 100
    split_seed: int = 0


@dataclass(frozen=True)
class ModelConfig:
    num_qubits: int = 4
    offset: float = 3.75
    slope: float = 0.25


@dataclass(frozen=True)
class BifurcationConfig:
    r_min: float = 0.0
    r_max: float = 4.0
    num_r: int = 801
    iterations: int = 50
    x1: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=lambda: TrainingConfig(epochs=500))
    robustness: RobustnessConfig = field(default_factory=RobustnessConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bifurcation: BifurcationConfig = field(default_factory=BifurcationConfig)
    workers: int = 1

    def to_dict(self) -> dict:
        d = {name: asdict(getattr(self, name)) for name in _SECTIONS}
        d["training"] = self.training.to_dict()
        d["workers"] = self.workers
        return d


PAPER_SCALE = {
    "data": {"count": 1000, "train_count": 200},
    "training": {"epochs": 2000},
    "robustness": {"seeds": list(range(50))},
    "sweep": {"seeds": list(range(50))},
}

_SECTIONS = {
    "data": DataConfig,
    "model": ModelConfig,
    "training": TrainingConfig,
    "robustness": RobustnessConfig,
    "sweep": SweepConfig,
    "bifurcation": BifurcationConfig,
}


def _check_type(where, default, value):
    if isinstance(default, bool) or isinstance(value, bool):
        ok = isinstance(value, bool) and isinstance(default, bool)
    elif isinstance(default, int) and not where.endswith("batch_size"):
        ok = isinstance(value, int)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float))
    elif isinstance(default, tuple):
        ok = isinstance(value, (list, tuple)) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        )
    elif isinstance(default, str):
        ok = isinstance(value, str)
    else:  # optional batch size
        ok = value is None or isinstance(value, int)
    if not ok:
        raise ConfigError(f"config key '{where}' has invalid value {value!r}")


def _build_section(name, cls, base, values):
    if not isinstance(values, dict):
        raise ConfigError(f"section '{name}' must be an object")
    values = dict(values)
    if cls is TrainingConfig and "lambda" in values:
        values["lam"] = values.pop("lambda")
    known = {f.name for f in fields(cls)}
    for key in values:
        if key not in known:
            shown = "lambda" if key == "lam" else key
            raise ConfigError(f"unknown config key '{name}.{shown}'")
    for key, value in values.items():
        _check_type(f"{name}.{'lambda' if key == 'lam' else key}", getattr(base, key), value)
    try:
        return replace(base, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value in section '{name}': {exc}") from None


def config_from_dict(doc: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    updates = {}
    for key, values in doc.items():
        if key == "workers":
            if not isinstance(values, int) or values < 1:
                raise ConfigError("'workers' must be a positive integer")
            updates["workers"] = values
        elif key in _SECTIONS:
            updates[key] = _build_section(key, _SECTIONS[key], getattr(cfg, key), values)
        else:
            raise ConfigError(f"unknown config section '{key}'")
    return replace(cfg, **updates)


def load_config(path=None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return config_from_dict(doc)
