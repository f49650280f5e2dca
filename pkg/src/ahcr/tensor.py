"""Dense tensor primitives.

Tensors are plain ``numpy.ndarray`` values in row-major (C) order; image
batches use the axis order ``[batch, channel, height, width]``.  Nothing here
broadcasts: every shape mismatch raises :class:`ShapeError`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

FLOAT32 = np.dtype(np.float32)
FLOAT64 = np.dtype(np.float64)
PRECISIONS = {"float32": FLOAT32, "float64": FLOAT64}


class ShapeError(ValueError):
    """Raised when tensor shapes are incompatible with an operation."""


def resolve_dtype(precision) -> np.dtype:
    if isinstance(precision, str):
        try:
            return PRECISIONS[precision]
        except KeyError:
            raise ValueError(f"unknown precision {precision!r}; use float32 or float64") from None
    dtype = np.dtype(precision)
    if dtype not in (FLOAT32, FLOAT64):
        raise ValueError(f"unsupported element type {dtype}")
    return dtype


def zeros(shape: Sequence[int], dtype=FLOAT32) -> np.ndarray:
    shape = tuple(int(d) for d in shape)
    if not shape or any(d < 1 for d in shape):
        raise ShapeError(f"shape must be non-empty with positive dims, got {shape}")
    return np.zeros(shape, dtype=dtype)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of ``a[M,K]`` and ``b[K,N]``."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dims differ: {a.shape} x {b.shape}")
    return a @ b


def out_size(dim: int, window: int, stride: int, pad: int) -> int:
    n = (dim + 2 * pad - window) // stride + 1
    if window > dim + 2 * pad or n < 1:
        raise ShapeError(f"window {window} exceeds padded extent {dim + 2 * pad}")
    return n


def pad_spatial(x: np.ndarray, pad: int, value: float = 0.0) -> np.ndarray:
    if pad == 0:
        return x
    widths = [(0, 0)] * (x.ndim - 2) + [(pad, pad), (pad, pad)]
    return np.pad(x, widths, mode="constant", constant_values=value)


def unfold(x: np.ndarray, window: int, stride: int = 1, pad: int = 0,
           pad_value: float = 0.0) -> np.ndarray:
    """Extract sliding receptive fields of ``x[C,H,W]`` as columns (im2col).

    Returns ``[C*window*window, outH*outW]``; column ``j`` holds the padded
    receptive field of output position ``j`` (row-major), ordered
    channel-major and then row-major inside the window.
    """
    if x.ndim != 3:
        raise ShapeError(f"unfold expects [C,H,W], got {x.shape}")
    return unfold_batch(x[None], window, stride, pad, pad_value)


def fold(cols: np.ndarray, input_shape: Sequence[int], window: int, stride: int = 1,
         pad: int = 0) -> np.ndarray:
    """Adjoint of :func:`unfold`: scatter-add columns back into a ``[C,H,W]`` image."""
    if len(input_shape) != 3:
        raise ShapeError(f"fold target must be [C,H,W], got {tuple(input_shape)}")
    return fold_batch(cols, (1,) + tuple(input_shape), window, stride, pad)[0]


def unfold_batch(x: np.ndarray, window: int, stride: int = 1, pad: int = 0,
                 pad_value: float = 0.0) -> np.ndarray:
    """Batched :func:`unfold` of ``x[N,C,H,W]`` into ``[C*window*window, N*outH*outW]``.

    Columns are sample-major: sample ``n`` occupies columns
    ``n*outH*outW .. (n+1)*outH*outW - 1``.
    """
    if x.ndim != 4:
        raise ShapeError(f"unfold_batch expects [N,C,H,W], got {x.shape}")
    if window < 1 or stride < 1 or pad < 0:
        raise ShapeError(f"bad window geometry window={window} stride={stride} pad={pad}")
    n, c, h, w = x.shape
    oh = out_size(h, window, stride, pad)
    ow = out_size(w, window, stride, pad)
    xp = pad_spatial(x, pad, pad_value).transpose(1, 0, 2, 3)
    cols = np.empty((c, window, window, n, oh, ow), dtype=x.dtype)
    for u in range(window):
        u_end = u + stride * (oh - 1) + 1
        for v in range(window):
            v_end = v + stride * (ow - 1) + 1
            cols[:, u, v] = xp[:, :, u:u_end:stride, v:v_end:stride]
    return cols.reshape(c * window * window, n * oh * ow)


def fold_batch(cols: np.ndarray, input_shape: Sequence[int], window: int, stride: int = 1,
               pad: int = 0) -> np.ndarray:
    """Adjoint of :func:`unfold_batch`.

    Overlapping receptive fields accumulate, so this is the exact transpose
    of the linear map ``unfold_batch`` (padding cells are discarded).
    """
    n, c, h, w = tuple(input_shape)
    oh = out_size(h, window, stride, pad)
    ow = out_size(w, window, stride, pad)
    expected = (c * window * window, n * oh * ow)
    if cols.shape != expected:
        raise ShapeError(f"fold expects columns {expected}, got {cols.shape}")
    cb = cols.reshape(c, window, window, n, oh, ow)
    xp = np.zeros((c, n, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for u in range(window):
        u_end = u + stride * (oh - 1) + 1
        for v in range(window):
            v_end = v + stride * (ow - 1) + 1
            xp[:, :, u:u_end:stride, v:v_end:stride] += cb[:, u, v]
    return np.ascontiguousarray(xp[:, :, pad:pad + h, pad:pad + w].transpose(1, 0, 2, 3))
