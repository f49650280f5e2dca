"""Forward and backward passes for the network's layer types.

Every ``*_forward`` returns ``(output, cache)`` and the matching
``*_backward`` consumes ``(dout, cache)``.  Class labels are 1-based ids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, fold_batch, out_size, pad_spatial, unfold_batch

# Upper bound on elements of one im2col buffer; batches are processed in
# sample chunks below it so the canonical widths fit in a few GB.
COLS_BUDGET = 1 << 25


def _chunks(n: int, per_sample: int):
    step = max(1, COLS_BUDGET // max(per_sample, 1))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


# ---------------------------------------------------------------- convolution

@dataclass
class ConvCache:
    x: np.ndarray
    w: np.ndarray
    pad: int
    cols: np.ndarray | None  # kept only when it fits in one chunk


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, pad: int = 3):
    """Stride-1 convolution of ``x[N,C,H,W]`` with ``w[F,C,k,k]`` and bias ``b[F]``."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv expects 4-d input and weights, got {x.shape}, {w.shape}")
    n, c, h, wd = x.shape
    f, cw, k, k2 = w.shape
    if c != cw:
        raise ShapeError(f"input has {c} channels, kernel expects {cw}")
    if k != k2:
        raise ShapeError(f"kernel must be square, got {k}x{k2}")
    if b.shape != (f,):
        raise ShapeError(f"bias shape {b.shape} != ({f},)")
    oh, ow = out_size(h, k, 1, pad), out_size(wd, k, 1, pad)
    w2 = w.reshape(f, -1)
    y = np.empty((n, f, oh, ow), dtype=x.dtype)
    cols = None
    for s in _chunks(n, c * k * k * oh * ow):
        cols = unfold_batch(x[s], k, 1, pad)
        ys = (w2 @ cols).reshape(f, -1, oh, ow)
        y[s] = ys.transpose(1, 0, 2, 3)
    y += b[None, :, None, None]
    keep = cols if cols is not None and cols.shape[1] == n * oh * ow else None
    return y, ConvCache(x, w, pad, keep)


def conv_backward(dy: np.ndarray, cache: ConvCache):
    x, w, pad = cache.x, cache.w, cache.pad
    n, c, h, wd = x.shape
    f, _, k, _ = w.shape
    oh, ow = out_size(h, k, 1, pad), out_size(wd, k, 1, pad)
    if dy.shape != (n, f, oh, ow):
        raise ShapeError(f"dy shape {dy.shape} != forward output {(n, f, oh, ow)}")
    w2 = w.reshape(f, -1)
    dw = np.zeros_like(w2)
    dx = np.empty_like(x)
    # chunk partial sums are reduced in fixed sample order
    for s in _chunks(n, c * k * k * oh * ow):
        cols = cache.cols if cache.cols is not None else unfold_batch(x[s], k, 1, pad)
        dy2 = dy[s].transpose(1, 0, 2, 3).reshape(f, -1)
        dw += dy2 @ cols.T
        dx[s] = fold_batch(w2.T @ dy2, x[s].shape, k, 1, pad)
    db = dy.sum(axis=(0, 2, 3))
    return dx, dw.reshape(w.shape), db


# ----------------------------------------------------------------------- relu

def relu_forward(x: np.ndarray):
    return np.maximum(x, 0), x


def relu_backward(dy: np.ndarray, cache: np.ndarray) -> np.ndarray:
    if dy.shape != cache.shape:
        raise ShapeError(f"dy shape {dy.shape} != input shape {cache.shape}")
    return np.where(cache > 0, dy, np.zeros((), dtype=dy.dtype))


# ------------------------------------------------------------------- max-pool

@dataclass(frozen=True)
class PoolSpec:
    window: int = 4
    stride: int = 2
    pad: int = 1


@dataclass
class PoolCache:
    input_shape: tuple
    argmax: np.ndarray  # window-local index (row-major) of the winner
    spec: PoolSpec


def maxpool_forward(x: np.ndarray, spec: PoolSpec = PoolSpec()):
    """Max-pool over ``window`` x ``window`` patches; padding never wins."""
    if x.ndim != 4:
        raise ShapeError(f"maxpool expects [N,C,H,W], got {x.shape}")
    if min(x.shape[2:]) < 2:
        raise ShapeError(f"spatial dims must be >= 2, got {x.shape[2:]}")
    k, st, p = spec.window, spec.stride, spec.pad
    oh, ow = out_size(x.shape[2], k, st, p), out_size(x.shape[3], k, st, p)
    xp = pad_spatial(x, p, -np.inf)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::st, ::st][:, :, :oh, :ow]
    win = win.reshape(x.shape[:2] + (oh, ow, k * k))
    arg = win.argmax(axis=-1)  # first occurrence on ties
    y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return y, PoolCache(x.shape, arg.astype(np.int8), spec)


def maxpool_backward(dy: np.ndarray, cache: PoolCache) -> np.ndarray:
    k, st, p = cache.spec.window, cache.spec.stride, cache.spec.pad
    n, c, h, w = cache.input_shape
    if dy.shape != cache.argmax.shape:
        raise ShapeError(f"dy shape {dy.shape} != pooled shape {cache.argmax.shape}")
    oh, ow = dy.shape[2:]
    dxp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=dy.dtype)
    for u in range(k):
        for v in range(k):
            hit = cache.argmax == u * k + v
            dxp[:, :, u:u + st * (oh - 1) + 1:st, v:v + st * (ow - 1) + 1:st] += dy * hit
    return np.ascontiguousarray(dxp[:, :, p:p + h, p:p + w])


# ---------------------------------------------------------------------- dense

def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Affine map ``y = x @ w.T + b`` with ``w[out,in]``."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"dense: input {x.shape} incompatible with weights {w.shape}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"dense: bias {b.shape} != ({w.shape[0]},)")
    return x @ w.T + b, (x, w)


def dense_backward(dy: np.ndarray, cache):
    x, w = cache
    if dy.shape != (x.shape[0], w.shape[0]):
        raise ShapeError(f"dense: dy {dy.shape} != {(x.shape[0], w.shape[0])}")
    return dy @ w, dy.T @ x, dy.sum(axis=0)


# -------------------------------------------------------------------- dropout

@dataclass(frozen=True)
class DropoutSpec:
    rate: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


def dropout_mask(shape, rate: float, rng: np.random.Generator, dtype) -> np.ndarray:
    """Inverted-dropout mask: 0 for dropped units, ``1/(1-rate)`` for survivors."""
    keep = rng.random(shape) >= rate
    return (keep / (1.0 - rate)).astype(dtype)


def dropout_forward(x: np.ndarray, spec: DropoutSpec, train: bool,
                    rng: np.random.Generator | None = None):
    if not train or spec.rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("train-mode dropout needs a random generator")
    mask = dropout_mask(x.shape, spec.rate, rng, x.dtype)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask) -> np.ndarray:
    return dy if mask is None else dy * mask


# ------------------------------------------------------------------ loss

def softmax_cross_entropy(logits: np.ndarray, labels):
    """Mean cross-entropy over the batch and its gradient w.r.t. ``logits``."""
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"logits {logits.shape} vs labels {labels.shape}")
    n, k = logits.shape
    if labels.size and (labels.min() < 1 or labels.max() > k):
        raise ValueError(f"labels must be in 1..{k}")
    idx = labels.astype(np.int64) - 1
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    loss = float(-log_p[np.arange(n), idx].mean())
    dlogits = np.exp(log_p)
    dlogits[np.arange(n), idx] -= 1
    dlogits /= n
    return loss, dlogits.astype(logits.dtype, copy=False)
