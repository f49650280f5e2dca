"""Run configuration: defaults, presets, ``key = value`` files and overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .model import CANONICAL_WIDTHS
from .optim import SgdConfig
from .svm import SvmTrainConfig


class ConfigError(ValueError):
    """Unknown key or unparseable value."""


@dataclass
class RunConfig:
    # network optimizer
    learning_rate: float = 0.02
    momentum: float = 0.8
    weight_decay: float = 0.001
    batch_size: int = 32
    epochs: int = 400
    seed: int = 0
    # network shape
    widths: str = ",".join(map(str, CANONICAL_WIDTHS))
    dropout_rate: float = 0.5
    precision: str = "float32"
    # SVM head
    svm_reg_lambda: float = 1e-4
    svm_learning_rate: float = 0.01
    svm_epochs: int = 50
    svm_batch_size: int = 32
    svm_dropout_rate: float = 0.5
    # data
    data_dir: str = ""
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    invert: bool = False
    synth: bool = False
    per_class: int = 100
    data_seed: int = 0
    out_dir: str = "run"

    def width_tuple(self) -> tuple[int, int, int]:
        try:
            parts = tuple(int(w) for w in self.widths.split(","))
        except ValueError:
            raise ConfigError(f"widths: expected three integers, got {self.widths!r}") from None
        if len(parts) != 3 or min(parts) < 1:
            raise ConfigError(f"widths: expected three positive integers, got {self.widths!r}")
        return parts

    def sgd(self) -> SgdConfig:
        try:
            return SgdConfig(self.learning_rate, self.momentum, self.weight_decay,
                             self.batch_size, self.epochs, self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def svm(self) -> SvmTrainConfig:
        try:
            return SvmTrainConfig(self.svm_reg_lambda, self.svm_learning_rate, self.svm_epochs,
                                  self.svm_batch_size, self.svm_dropout_rate, self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


PRESETS = {
    "canonical": {},
    "desk": {"widths": "16,32,64", "epochs": 15},
}

FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def coerce(key: str, value):
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = FIELD_TYPES[key]
    if not isinstance(value, str):
        return value
    try:
        if kind == "bool":
            low = value.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
    return value.strip()


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, value)
    return values


def build_config(preset: str | None = None, file: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Defaults, then preset, then config file, then explicit overrides."""
    cfg = RunConfig()
    layers = []
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        layers.append(PRESETS[preset])
    if file:
        layers.append(read_config_file(file))
    layers.append(overrides or {})
    for layer in layers:
        cfg = dataclasses.replace(cfg, **{k: coerce(k, v) for k, v in layer.items()})
    cfg.width_tuple()
    return cfg
