"""One-vs-rest linear SVM head trained with dropout-perturbed features.

Each class ``c`` owns a separator ``(W[c], b[c])`` trained on the binary
target ``+1`` for its own samples and ``-1`` for everything else.  The
objective minimized by mini-batch subgradient descent is::

    (1/N) * sum_n sum_c max(0, 1 - t_nc * s_nc) + lambda * ||W||^2

where ``s = standardize(x) @ W.T + b``.  During training every presentation
of a feature vector gets a fresh inverted-dropout mask; prediction uses the
clean features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import dropout_mask
from .tensor import ShapeError


@dataclass
class SvmTrainConfig:
    reg_lambda: float = 1e-4
    learning_rate: float = 0.01
    epochs: int = 50
    batch_size: int = 32
    dropout_rate: float = 0.5
    seed: int = 0
    standardize: bool = True

    def __post_init__(self):
        if self.reg_lambda < 0 or self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("SVM config values must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")


@dataclass
class SvmModel:
    weights: np.ndarray  # [n_classes, dim]
    bias: np.ndarray     # [n_classes]
    reg_lambda: float
    mean: np.ndarray     # per-dimension standardization
    scale: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, n_classes: int, dim: int, reg_lambda: float = 1e-4) -> "SvmModel":
        return cls(np.zeros((n_classes, dim)), np.zeros(n_classes), reg_lambda,
                   np.zeros(dim), np.ones(dim))

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.dim:
            raise ShapeError(f"expected features [N,{self.dim}], got {features.shape}")
        return (features - self.mean) / self.scale


def _check_labels(labels, n: int, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ShapeError(f"{labels.shape[0] if labels.ndim else 0} labels for {n} samples")
    if labels.min() < 1 or labels.max() > n_classes:
        raise ValueError(f"labels must be in 1..{n_classes}")
    return labels


def _targets(labels: np.ndarray, n_classes: int) -> np.ndarray:
    t = -np.ones((len(labels), n_classes))
    t[np.arange(len(labels)), labels - 1] = 1.0
    return t


def hinge_subgradient(weights, bias, x, targets, reg_lambda):
    """Objective value and subgradients on one (already standardized) batch."""
    scores = x @ weights.T + bias
    margins = 1.0 - targets * scores
    active = margins > 0
    n = len(x)
    loss = margins[active].sum() / n + reg_lambda * float(np.sum(weights * weights))
    ds = np.where(active, -targets, 0.0) / n
    dw = ds.T @ x + 2 * reg_lambda * weights
    db = ds.sum(axis=0)
    return loss, dw, db


def svm_objective(model: SvmModel, features, labels) -> float:
    x = model.transform(features)
    labels = _check_labels(labels, len(x), model.n_classes)
    return hinge_subgradient(model.weights, model.bias, x, _targets(labels, model.n_classes),
                             model.reg_lambda)[0]


def svm_train(features, labels, config: SvmTrainConfig = SvmTrainConfig(),
              n_classes: int = 28, init: SvmModel | None = None,
              trace: list | None = None) -> SvmModel:
    """Fit the one-vs-rest head; appends the full-data objective per epoch to ``trace``."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or len(features) == 0:
        raise ValueError("svm_train needs a non-empty [N,D] feature matrix")
    n, dim = features.shape
    labels = _check_labels(labels, n, n_classes)
    if init is not None:
        model = SvmModel(init.weights.copy(), init.bias.copy(), config.reg_lambda,
                         init.mean.copy(), init.scale.copy())
    else:
        model = SvmModel.zeros(n_classes, dim, config.reg_lambda)
        if config.standardize:
            model.mean = features.mean(axis=0)
            std = features.std(axis=0)
            model.scale = np.where(std > 1e-12, std, 1.0)
    x_all = model.transform(features)
    t_all = _targets(labels, n_classes)
    rng = np.random.default_rng(config.seed)
    w, b = model.weights, model.bias
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            x = x_all[idx]
            if config.dropout_rate > 0:
                x = x * dropout_mask(x.shape, config.dropout_rate, rng, x.dtype)
            _, dw, db = hinge_subgradient(w, b, x, t_all[idx], config.reg_lambda)
            w -= config.learning_rate * dw
            b -= config.learning_rate * db
        if trace is not None:
            trace.append(hinge_subgradient(w, b, x_all, t_all, config.reg_lambda)[0])
    return model


def svm_scores(model: SvmModel, features) -> np.ndarray:
    return model.transform(features) @ model.weights.T + model.bias


def svm_predict(model: SvmModel, features) -> np.ndarray:
    """Class ids (1-based) of the highest score; ties go to the lowest id."""
    return np.argmax(svm_scores(model, features), axis=1) + 1
