"""Mini-batch SGD with classical momentum and L2 weight decay."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dataset import Glyphs
from .model import Model
from .tensor import ShapeError

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch, self.batch, self.loss = epoch, batch, loss


@dataclass
class SgdConfig:
    learning_rate: float = 0.02
    momentum: float = 0.8
    weight_decay: float = 0.001
    batch_size: int = 32
    # "iterations" in the reference setup are taken to be passes over the data
    max_epochs: int = 400
    seed: int = 0
    decay_biases: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.weight_decay < 0 or self.max_epochs < 0:
            raise ValueError("weight_decay and max_epochs must be non-negative")


def sgd_step(params: dict, grads: dict, velocity: dict, config: SgdConfig):
    """One in-place update of every parameter.

    ``v <- momentum*v - lr*(g + wd*p)`` then ``p <- p + v``.  1-d tensors
    (biases) skip the decay term unless ``config.decay_biases``.
    """
    lr, m, wd = config.learning_rate, config.momentum, config.weight_decay
    for name, p in params.items():
        g, v = grads[name], velocity[name]
        if not (p.shape == g.shape == v.shape):
            raise ShapeError(f"{name}: param {p.shape}, grad {g.shape}, velocity {v.shape}")
        step = g + wd * p if (wd and (p.ndim > 1 or config.decay_biases)) else g
        v *= m
        v -= lr * step
        p += v
    return params, velocity


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: Optional[float]


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def csv_text(self) -> str:
        lines = ["epoch,train_loss,train_acc,test_acc"]
        for r in self.records:
            test = "" if r.test_acc is None else f"{r.test_acc:.4f}"
            lines.append(f"{r.epoch},{r.train_loss:.6f},{r.train_acc:.4f},{test}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, path) -> "TrainHistory":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([EpochRecord(int(r["epoch"]), float(r["train_loss"]), float(r["train_acc"]),
                                float(r["test_acc"]) if r["test_acc"] else None) for r in rows])


def accuracy(model: Model, glyphs: Glyphs, batch_size: int = 64) -> float:
    return 100.0 * float(np.mean(model.predict(glyphs.images, batch_size) == glyphs.labels))


def train(model: Model, train_set: Glyphs, test_set: Glyphs | None, config: SgdConfig,
          on_epoch: Callable[[EpochRecord], bool | None] | None = None) -> TrainHistory:
    """Train ``model`` in place and return its per-epoch history.

    Each epoch reshuffles with a generator seeded once from ``config.seed``,
    so identical seeds reproduce identical parameters.  ``train_acc`` is the
    running accuracy of the train-mode (dropout) forward passes; ``test_acc``
    is measured in inference mode after the epoch.  ``on_epoch`` may return
    True to stop early.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    n = len(train_set)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        total_loss, correct = 0.0, 0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            x = train_set.images[idx][:, None]
            y = train_set.labels[idx]
            # overflow shows up as a non-finite loss, checked right below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads, out = model.loss_and_grads(x, y, "train", rng)
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch, b, loss)
            sgd_step(model.params, grads, model.velocity, config)
            total_loss += loss * len(idx)
            correct += int(np.sum(out.logits.argmax(axis=1) + 1 == y))
        record = EpochRecord(
            epoch, total_loss / n, 100.0 * correct / n,
            accuracy(model, test_set) if test_set is not None and len(test_set) else None,
        )
        history.records.append(record)
        log.info("epoch %d loss %.4f train %.2f%% test %s", epoch, record.train_loss,
                 record.train_acc, "-" if record.test_acc is None else f"{record.test_acc:.2f}%")
        if on_epoch is not None and on_epoch(record):
            break
    return history
