"""Grouping character classes into master-stroke clusters with k-means."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .dataset import CLASS_IDS, N_CLASSES

# Classes sharing a base stroke, differing by dots or small marks.
REFERENCE_GROUPS = (
    ("alef",),
    ("baa", "taa", "thaa", "noon", "yaa"),
    ("gem", "haa", "khaa"),
    ("dal", "zal"),
    ("raa", "zeen", "waw"),
    ("seen", "sheen"),
    ("saad", "daad"),
    ("taaa", "zaaa"),
    ("aeen", "gheen"),
    ("faa", "qaf"),
    ("kaf", "lam"),
    ("mem",),
    ("heh",),
)
N_STROKE_GROUPS = len(REFERENCE_GROUPS)


def reference_partition() -> np.ndarray:
    """Group id (1..13) of each class id 1..28, as an array indexed by ``class_id - 1``."""
    groups = np.zeros(N_CLASSES, dtype=np.int64)
    for gid, names in enumerate(REFERENCE_GROUPS, start=1):
        for name in names:
            groups[CLASS_IDS[name] - 1] = gid
    assert groups.min() == 1
    return groups


def class_centroids(features, labels, n_classes: int = N_CLASSES) -> np.ndarray:
    """Mean feature vector per class; row ``c-1`` belongs to class ``c``."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or labels.shape != (len(features),):
        raise ValueError(f"features {features.shape} vs labels {labels.shape}")
    counts = np.bincount(labels, minlength=n_classes + 1)[1:n_classes + 1]
    missing = [c for c in range(1, n_classes + 1) if counts[c - 1] == 0]
    if missing:
        raise ValueError(f"no samples for class {missing[0]}" if len(missing) == 1
                         else f"no samples for classes {missing}")
    sums = np.zeros((n_classes, features.shape[1]))
    np.add.at(sums, labels - 1, features)
    return sums / counts[:, None]


@dataclass
class ClusterAssignment:
    labels: np.ndarray     # cluster id 1..k per point
    centers: np.ndarray    # [k, dim]; row j-1 is cluster j
    inertia: float
    n_iter: int
    inertia_history: list[float] = field(default_factory=list)


def _sq_dists(points, centers):
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(-1)


def _plus_plus(points, k, rng):
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(points, points[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:  # all remaining points coincide with a center
            nxt = next(i for i in range(n) if i not in chosen)
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(points, points[[nxt]])[:, 0])
    return points[chosen].copy()


def _repair_empty(points, assign, centers, k):
    """Give each empty cluster the point farthest from its own center."""
    for j in range(k):
        counts = np.bincount(assign, minlength=k)
        if counts[j]:
            continue
        d = ((points - centers[assign]) ** 2).sum(1)
        d[counts[assign] <= 1] = -1.0  # never empty another cluster
        i = int(np.argmax(d))
        assign[i] = j
        centers[j] = points[i]
    return assign


def _inertia(points, centers, assign):
    return float(((points - centers[assign]) ** 2).sum())


def kmeans(points, k: int = N_STROKE_GROUPS, seed: int = 0, max_iter: int = 300,
           tol: float = 1e-8) -> ClusterAssignment:
    """Lloyd's algorithm from k-means++ seeding.

    Nearest-center ties go to the lowest center index.  Iteration stops when
    the inertia improves by less than ``tol`` or after ``max_iter`` rounds.
    Cluster ids are renumbered by first appearance in ``points`` order.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be [n, dim], got {points.shape}")
    n = len(points)
    if k < 1 or n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    rng = np.random.default_rng(seed)
    centers = _plus_plus(points, k, rng)
    history: list[float] = []
    assign = np.zeros(n, dtype=np.int64)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        assign = np.argmin(_sq_dists(points, centers), axis=1)
        assign = _repair_empty(points, assign, centers, k)
        for j in range(k):
            centers[j] = points[assign == j].mean(axis=0)
        inertia = _inertia(points, centers, assign)
        if history and inertia > history[-1] * (1 + 1e-12) + 1e-300:
            raise RuntimeError(f"inertia rose from {history[-1]} to {inertia} at iteration {n_iter}")
        history.append(inertia)
        if len(history) > 1 and history[-2] - inertia < tol:
            break
    # renumber clusters by first appearance
    order = list(dict.fromkeys(assign.tolist()))
    remap = np.empty(k, dtype=np.int64)
    remap[order] = np.arange(k)
    return ClusterAssignment(remap[assign] + 1, centers[order], history[-1], n_iter, history)


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement of two labelings of the same items."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"partitions cover different items: {a.shape} vs {b.shape}")
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    pairs = sum(comb(int(x), 2) for x in table.ravel())
    rows = sum(comb(int(x), 2) for x in table.sum(1))
    cols = sum(comb(int(x), 2) for x in table.sum(0))
    total = comb(n, 2)
    expected = rows * cols / total if total else 0.0
    max_index = (rows + cols) / 2
    if max_index == expected:
        return 1.0
    return (pairs - expected) / (max_index - expected)


def compare_partition(assignment, reference=None) -> float:
    """ARI between a class->cluster mapping and the master-stroke groups."""
    labels = assignment.labels if isinstance(assignment, ClusterAssignment) else assignment
    ref = reference_partition() if reference is None else reference
    if len(labels) != len(ref):
        raise ValueError(f"assignment covers {len(labels)} classes, reference {len(ref)}")
    return adjusted_rand_index(labels, ref)
