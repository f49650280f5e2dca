"""Recognition-rate reports: CRR/ECR, per-class tables and confusion analysis.

CRR is the percentage of samples whose predicted class equals the true
class; ECR is defined as ``100 - CRR``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dataset import CLASS_GLYPHS, CLASS_NAMES, N_CLASSES, Glyphs

# Published rates used as reference rows in the comparison table.
PUBLISHED_RESULTS = (
    ("published CNN (AHCD)", 94.90, 5.10),
    ("published DCNN-SVM (AHCD)", 95.07, 4.93),
)


@dataclass
class EvalReport:
    head: str
    crr: float
    ecr: float
    confusion: np.ndarray  # [n_classes, n_classes], row = true, column = predicted

    @property
    def n_classes(self) -> int:
        return self.confusion.shape[0]

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def class_counts(self) -> np.ndarray:
        return self.confusion.sum(axis=1)

    @property
    def class_crr(self) -> np.ndarray:
        """Per-class CRR in percent; NaN for classes without samples."""
        counts = self.class_counts
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(counts > 0, 100.0 * np.diag(self.confusion) / counts, np.nan)

    @property
    def class_ecr(self) -> np.ndarray:
        return 100.0 - self.class_crr

    def summary_line(self) -> str:
        return f"{self.head},{self.crr:.4f},{self.ecr:.4f}"


def report_from_predictions(y_true, y_pred, head: str = "softmax",
                            n_classes: int = N_CLASSES) -> EvalReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ValueError("cannot evaluate an empty sample set")
    if y_true.shape != y_pred.shape:
        raise ValueError(f"{y_true.shape} labels vs {y_pred.shape} predictions")
    for arr in (y_true, y_pred):
        if arr.min() < 1 or arr.max() > n_classes:
            raise ValueError(f"class ids must be in 1..{n_classes}")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y_true - 1, y_pred - 1), 1)
    crr = 100.0 * int(np.trace(confusion)) / len(y_true)
    return EvalReport(head, crr, 100.0 - crr, confusion)


def evaluate(predict_fn: Callable[[np.ndarray], np.ndarray], samples: Glyphs,
             head: str = "softmax", n_classes: int = N_CLASSES) -> EvalReport:
    """Score ``predict_fn`` (images -> class ids) on ``samples``."""
    if len(samples) == 0:
        raise ValueError("cannot evaluate an empty sample set")
    return report_from_predictions(samples.labels, predict_fn(samples.images), head, n_classes)


def _fmt(x: float) -> str:
    return "-" if np.isnan(x) else f"{x:.2f}"


def per_class_table(report: EvalReport) -> str:
    """Character / CRR / ECR table with a count-weighted average row."""
    lines = [f"{'Character':<16}{'CRR (%)':>10}{'ECR (%)':>10}"]
    crr, ecr = report.class_crr, report.class_ecr
    for i in range(report.n_classes):
        label = f"{CLASS_GLYPHS[i]} {CLASS_NAMES[i]}" if report.n_classes == N_CLASSES else str(i + 1)
        lines.append(f"{label:<16}{_fmt(crr[i]):>10}{_fmt(ecr[i]):>10}")
    lines.append(f"{'Average':<16}{report.crr:>10.2f}{report.ecr:>10.2f}")
    return "\n".join(lines) + "\n"


def cluster_table(report: EvalReport, groups: Sequence[int]) -> str:
    """Same layout aggregated over class groups (``groups[c-1]`` is the group of class c).

    A prediction counts as correct only when it names the exact class.
    """
    groups = np.asarray(groups)
    lines = [f"{'Group':<28}{'CRR (%)':>10}{'ECR (%)':>10}"]
    diag = np.diag(report.confusion)
    counts = report.class_counts
    for g in sorted(set(groups.tolist())):
        members = np.flatnonzero(groups == g)
        label = " ".join(CLASS_GLYPHS[m] for m in members) if report.n_classes == N_CLASSES else str(g)
        n = counts[members].sum()
        crr = 100.0 * diag[members].sum() / n if n else float("nan")
        lines.append(f"{label:<28}{_fmt(crr):>10}{_fmt(100.0 - crr):>10}")
    lines.append(f"{'Average':<28}{report.crr:>10.2f}{report.ecr:>10.2f}")
    return "\n".join(lines) + "\n"


def confusion_pairs(report: EvalReport, top_k: int = 10) -> list[tuple[int, int, int]]:
    """Most frequent (true, predicted, count) mistakes, ties by (true, predicted)."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    c = report.confusion
    pairs = [(int(c[i, j]), i + 1, j + 1) for i in range(c.shape[0]) for j in range(c.shape[1])
             if i != j and c[i, j] > 0]
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    return [(t, p, n) for n, t, p in pairs[:top_k]]


def confusion_csv(report: EvalReport) -> str:
    names = CLASS_NAMES if report.n_classes == N_CLASSES else [str(i + 1) for i in range(report.n_classes)]
    lines = ["true\\pred," + ",".join(names)]
    for name, row in zip(names, report.confusion):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def comparison_table(reports: Sequence[EvalReport], include_published: bool = True) -> str:
    """CRR/ECR side by side for several heads, optionally with published rows."""
    lines = [f"{'System':<30}{'CRR':>10}{'ECR':>10}"]
    if include_published:
        for name, crr, ecr in PUBLISHED_RESULTS:
            lines.append(f"{name:<30}{crr:>9.2f}%{ecr:>9.2f}%")
    for r in reports:
        lines.append(f"{'this run: ' + r.head + ' head':<30}{r.crr:>9.2f}%{r.ecr:>9.2f}%")
    return "\n".join(lines) + "\n"
