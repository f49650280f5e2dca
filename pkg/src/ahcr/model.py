"""The three-stage convolutional recognizer.

Layer stack::

    conv1 -> relu -> pool -> conv2 -> relu -> pool -> conv3 -> relu -> pool
          -> fc1 (hidden) -> relu -> dropout -> fc2 (classes)

With the canonical widths (128, 256, 512) a 64x64x1 glyph flows through
64x64x128, 32x32x128, 32x32x256, 16x16x256, 16x16x512, 8x8x512, 1024, 28.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers as L
from .tensor import ShapeError, resolve_dtype

KERNEL = 7
CONV_PAD = 3
INPUT_SIZE = 64
HIDDEN = 1024
N_CLASSES = 28
CANONICAL_WIDTHS = (128, 256, 512)
POOL = L.PoolSpec(window=4, stride=2, pad=1)

PARAM_ORDER = ("conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w", "conv3.b",
               "fc1.w", "fc1.b", "fc2.w", "fc2.b")


def expected_shapes(widths, hidden: int = HIDDEN, n_classes: int = N_CLASSES,
                    size: int = INPUT_SIZE) -> list[tuple[int, ...]]:
    """Per-stage activation shapes (channels-last, as printed in layer tables)."""
    c1, c2, c3 = widths
    return [
        (size, size, 1),
        (size, size, c1), (size // 2, size // 2, c1),
        (size // 2, size // 2, c2), (size // 4, size // 4, c2),
        (size // 4, size // 4, c3), (size // 8, size // 8, c3),
        (hidden,), (n_classes,),
    ]


@dataclass
class ForwardResult:
    logits: np.ndarray
    features: np.ndarray
    caches: dict
    trace: list = field(default_factory=list)


class Model:
    """Parameters plus momentum buffers of the recognizer.

    ``params`` maps names in :data:`PARAM_ORDER` to arrays of the model
    dtype; ``velocity`` mirrors it and is owned by the optimizer.
    """

    def __init__(self, widths=CANONICAL_WIDTHS, dropout_rate: float = 0.5,
                 precision="float32", seed: int = 0, hidden: int = HIDDEN,
                 n_classes: int = N_CLASSES, init: bool = True):
        self.widths = tuple(int(w) for w in widths)
        if len(self.widths) != 3 or min(self.widths) < 1:
            raise ValueError(f"need three positive channel widths, got {widths}")
        self.hidden = hidden
        self.n_classes = n_classes
        self.dtype = resolve_dtype(precision)
        self.dropout = L.DropoutSpec(dropout_rate)
        self.params: dict[str, np.ndarray] = {}
        for name, shape in self.param_shapes().items():
            self.params[name] = np.zeros(shape, dtype=self.dtype)
        if init:
            self.initialize(seed)
        self.velocity = {k: np.zeros_like(v) for k, v in self.params.items()}

    @property
    def flat_dim(self) -> int:
        return self.widths[2] * (INPUT_SIZE // 8) ** 2

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        c1, c2, c3 = self.widths
        return {
            "conv1.w": (c1, 1, KERNEL, KERNEL), "conv1.b": (c1,),
            "conv2.w": (c2, c1, KERNEL, KERNEL), "conv2.b": (c2,),
            "conv3.w": (c3, c2, KERNEL, KERNEL), "conv3.b": (c3,),
            "fc1.w": (self.hidden, self.flat_dim), "fc1.b": (self.hidden,),
            "fc2.w": (self.n_classes, self.hidden), "fc2.b": (self.n_classes,),
        }

    def initialize(self, seed: int) -> None:
        """He-normal weights (std = sqrt(2 / fan_in)), zero biases."""
        rng = np.random.default_rng(seed)
        for name in PARAM_ORDER:
            p = self.params[name]
            if name.endswith(".b"):
                p[...] = 0
            else:
                fan_in = int(np.prod(p.shape[1:]))
                p[...] = rng.standard_normal(p.shape) * np.sqrt(2.0 / fan_in)

    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    @classmethod
    def from_params(cls, params: dict[str, np.ndarray], dropout_rate: float = 0.5,
                    precision="float32") -> "Model":
        widths = tuple(params[f"conv{i}.w"].shape[0] for i in (1, 2, 3))
        hidden, n_classes = params["fc1.w"].shape[0], params["fc2.w"].shape[0]
        model = cls(widths, dropout_rate, precision, hidden=hidden,
                    n_classes=n_classes, init=False)
        for name, shape in model.param_shapes().items():
            if params[name].shape != shape:
                raise ShapeError(f"{name}: stored shape {params[name].shape} != {shape}")
            model.params[name][...] = params[name]
        return model

    # ------------------------------------------------------------------ passes

    def forward(self, x: np.ndarray, mode: str = "inference",
                rng: np.random.Generator | None = None) -> ForwardResult:
        """Run a batch ``x[N,1,64,64]`` through the network.

        ``features`` is the post-ReLU hidden activation, taken after dropout
        in ``"train"`` mode and without dropout in ``"inference"`` mode.
        """
        if mode not in ("train", "inference"):
            raise ValueError(f"mode must be 'train' or 'inference', got {mode!r}")
        if x.ndim != 4 or x.shape[1:] != (1, INPUT_SIZE, INPUT_SIZE):
            raise ShapeError(f"expected input [N,1,{INPUT_SIZE},{INPUT_SIZE}], got {x.shape}")
        p = self.params
        h = np.ascontiguousarray(x, dtype=self.dtype)
        caches = {}
        trace = [_hwc(h)]
        for i in (1, 2, 3):
            h, caches[f"conv{i}"] = L.conv_forward(h, p[f"conv{i}.w"], p[f"conv{i}.b"], CONV_PAD)
            h, caches[f"relu{i}"] = L.relu_forward(h)
            trace.append(_hwc(h))
            h, caches[f"pool{i}"] = L.maxpool_forward(h, POOL)
            trace.append(_hwc(h))
        flat = h.reshape(h.shape[0], -1)
        caches["flat_shape"] = h.shape
        h, caches["fc1"] = L.dense_forward(flat, p["fc1.w"], p["fc1.b"])
        h, caches["relu4"] = L.relu_forward(h)
        h, caches["dropout"] = L.dropout_forward(h, self.dropout, mode == "train", rng)
        trace.append(h.shape[1:])
        features = h
        logits, caches["fc2"] = L.dense_forward(h, p["fc2.w"], p["fc2.b"])
        trace.append(logits.shape[1:])
        expected = expected_shapes(self.widths, self.hidden, self.n_classes)
        if trace != expected:
            raise ShapeError(f"shape pipeline {trace} != {expected}")
        return ForwardResult(logits, features, caches, trace)

    def backward(self, dlogits: np.ndarray, caches: dict) -> dict[str, np.ndarray]:
        grads = {}
        dh, grads["fc2.w"], grads["fc2.b"] = L.dense_backward(dlogits, caches["fc2"])
        dh = L.dropout_backward(dh, caches["dropout"])
        dh = L.relu_backward(dh, caches["relu4"])
        dh, grads["fc1.w"], grads["fc1.b"] = L.dense_backward(dh, caches["fc1"])
        dh = dh.reshape(caches["flat_shape"])
        for i in (3, 2, 1):
            dh = L.maxpool_backward(dh, caches[f"pool{i}"])
            dh = L.relu_backward(dh, caches[f"relu{i}"])
            dh, grads[f"conv{i}.w"], grads[f"conv{i}.b"] = L.conv_backward(dh, caches[f"conv{i}"])
        return grads

    def loss_and_grads(self, x: np.ndarray, labels, mode: str = "train",
                       rng: np.random.Generator | None = None):
        out = self.forward(x, mode, rng)
        loss, dlogits = L.softmax_cross_entropy(out.logits, labels)
        return loss, self.backward(dlogits, out.caches), out

    def loss(self, x: np.ndarray, labels) -> float:
        """Inference-mode mean cross-entropy."""
        return L.softmax_cross_entropy(self.forward(x).logits, labels)[0]

    def predict(self, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
        return self.logits(images, batch_size).argmax(axis=1) + 1

    def logits(self, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
        return self._batched(images, batch_size)[0]

    def features(self, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
        """Inference-mode hidden features, one row per image."""
        return self._batched(images, batch_size)[1]

    def _batched(self, images, batch_size):
        x = _as_batch(images)
        logits = np.empty((len(x), self.n_classes), dtype=self.dtype)
        feats = np.empty((len(x), self.hidden), dtype=self.dtype)
        for start in range(0, len(x), batch_size):
            out = self.forward(x[start:start + batch_size])
            logits[start:start + batch_size] = out.logits
            feats[start:start + batch_size] = out.features
        return logits, feats


def _hwc(a: np.ndarray) -> tuple[int, ...]:
    _, c, h, w = a.shape
    return (h, w, c)


def _as_batch(images: np.ndarray) -> np.ndarray:
    """Accept ``[N,64,64]`` or ``[N,1,64,64]``."""
    if images.ndim == 3:
        return images[:, None]
    return images
