"""Run configuration: one JSON file drives the whole pipeline.

Every stage derives its randomness from the single ``seed`` via labeled
streams (see ``seeding``), so stages re-run in isolation reproduce what a
full pipeline run produced.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data.poison import TrojanSpec
from .data.synth import SynthSpec
from .errors import ConfigError
from .mitigation import MitigationConfig
from .nn.train import Hyperparams
from .scan.config import ScanConfig

__all__ = ["RunConfig", "TrainSection", "MitigationSection", "load_config", "apply_overrides", "default_config"]


@dataclass(frozen=True)
class TrainSection:
    preset: str = "desk10"
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 0.02
    momentum: float = 0.9
    lr_decay: float = 0.9

    def hyperparams(self, seed: int) -> Hyperparams:
        return Hyperparams(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            lr_decay=self.lr_decay,
            seed=seed,
        )


@dataclass(frozen=True)
class MitigationSection:
    top_p: int = 4
    sweep: tuple = (2, 4, 6, 10)
    delta: float = 8.0
    max_iterations: int = 5
    retrain_epochs: int = 5
    retrain_learning_rate: float = 0.01
    retrain_batch_size: int = 32
    membership: str = "predicted"

    def config(self, top_p: int, seed: int) -> MitigationConfig:
        return MitigationConfig(
            top_p=top_p,
            delta=self.delta,
            max_iterations=self.max_iterations,
            retrain_epochs=self.retrain_epochs,
            retrain_learning_rate=self.retrain_learning_rate,
            retrain_batch_size=self.retrain_batch_size,
            membership=self.membership,
            seed=seed,
        )


@dataclass(frozen=True)
class RunConfig:
    seed: int = 7
    data: SynthSpec = field(default_factory=SynthSpec)
    trojan: TrojanSpec = field(default_factory=lambda: TrojanSpec(target_class=1))
    train: TrainSection = field(default_factory=TrainSection)
    scan: ScanConfig = field(default_factory=lambda: ScanConfig(sparsity_weight=0.03))
    mitigation: MitigationSection = field(default_factory=MitigationSection)
    prune_rates: tuple = (0.4, 0.5, 0.6)
    unlearn_subset_fraction: float = 0.10
    unlearn_replace_fraction: float = 0.20
    unlearn_epochs: int = 1


_SECTIONS = {
    "data": SynthSpec,
    "trojan": TrojanSpec,
    "train": TrainSection,
    "scan": ScanConfig,
    "mitigation": MitigationSection,
}


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}; valid keys are {sorted(names)}")
    kwargs = {}
    for key, value in data.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}; valid keys are {sorted(known)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value, key)
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: RunConfig) -> dict:
    def plain(value):
        if dataclasses.is_dataclass(value):
            return {f.name: plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, tuple):
            return list(value)
        return value

    return plain(cfg)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply ``key.path=value`` pairs; values parse as JSON, else raw strings."""
    data = config_to_dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"override key {key!r} does not name a config field")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"override key {key!r} does not name a config field")
        node[parts[-1]] = value
    return config_from_dict(data)


def default_config() -> RunConfig:
    return RunConfig()
