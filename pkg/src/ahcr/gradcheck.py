"""Central finite differences for checking analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np


def numerical_gradient(f: Callable[[], float], x: np.ndarray, h: float = 1e-5,
                       index=None) -> np.ndarray:
    """d f / d x by central differences, perturbing ``x`` in place.

    ``f`` takes no arguments and must read ``x`` by reference.  With
    ``index`` (a sequence of flat positions) only those entries are probed
    and a 1-d array in the same order is returned.
    """
    flat = x.reshape(-1)
    if not np.shares_memory(flat, x):
        raise ValueError("x must be contiguous so it can be perturbed in place")
    positions = range(flat.size) if index is None else index
    out = np.zeros(len(positions))
    for k, i in enumerate(positions):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        out[k] = (fp - fm) / (2 * h)
    return out.reshape(x.shape) if index is None else out


def relative_error(analytic, numeric) -> float:
    """``||a - n|| / max(||a||, ||n||)`` (0 when both vanish)."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - n) / scale)
