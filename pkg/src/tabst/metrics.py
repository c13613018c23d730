"""Classification metrics and cross-method rank aggregation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K count matrix; rows are truth, columns are predictions."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (counts < 0).any():
            raise ValueError("confusion matrix counts must be non-negative")

    @classmethod
    def from_labels(cls, y_true, y_pred, n_classes: int) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise ValueError("y_true and y_pred must have the same length")
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (y_true, y_pred), 1)
        return cls(counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _precision_recall(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray]:
    tp = np.diag(cm.counts).astype(float)
    pred = cm.counts.sum(axis=0).astype(float)
    truth = cm.counts.sum(axis=1).astype(float)
    with np.errstate(invalid="ignore"):
        precision = np.where(pred > 0, tp / np.where(pred > 0, pred, 1), 0.0)
        recall = np.where(truth > 0, tp / np.where(truth > 0, truth, 1), 0.0)
    return precision, recall


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    p, r = _precision_recall(cm)
    denom = p + r
    return np.where(denom > 0, 2 * p * r / np.where(denom > 0, denom, 1), 0.0)


def f1_binary(cm: ConfusionMatrix, positive: int = 1) -> float:
    """F1 for the designated positive class; 0 when precision + recall is 0."""
    return float(per_class_f1(cm)[positive])


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        return 0.0
    return float(np.trace(cm.counts) / cm.total)


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    """Mean per-class recall; a class with no truth rows counts as recall 0."""
    truth = cm.counts.sum(axis=1)
    if (truth == 0).any():
        warnings.warn("class with zero truth rows; its recall counts as 0")
    _, recall = _precision_recall(cm)
    return float(recall.mean())


def macro_f1(cm: ConfusionMatrix) -> float:
    return float(per_class_f1(cm).mean())


METRICS = {
    "accuracy": accuracy,
    "balanced_accuracy": balanced_accuracy,
    "macro_f1": macro_f1,
    "f1": f1_binary,
}


def compute_metric(metric: str, cm: ConfusionMatrix) -> float:
    if metric not in METRICS:
        raise KeyError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    return METRICS[metric](cm)


@dataclass(frozen=True)
class RankTable:
    """Per-column ranks of a methods x columns score matrix (1 = best)."""

    method_names: tuple[str, ...]
    column_names: tuple[str, ...]
    scores: np.ndarray
    ranks: np.ndarray
    averages: np.ndarray

    def rounded_averages(self) -> np.ndarray:
        # small nudge so exact .x5 averages round half-up like the display
        return np.round(self.averages + 1e-9, 1)

    def rounded_ranks(self) -> np.ndarray:
        return np.round(self.ranks + 1e-9, 1)

    def render(self) -> str:
        width = max(len(n) for n in self.method_names) + 2
        cols = list(self.column_names) + ["avg"]
        lines = ["".join(["method".ljust(width)] + [c.rjust(8) for c in cols])]
        rr = self.rounded_ranks()
        ra = self.rounded_averages()
        for i, name in enumerate(self.method_names):
            cells = [f"{v:.1f}".rjust(8) for v in rr[i]] + [f"{ra[i]:.1f}".rjust(8)]
            lines.append("".join([name.ljust(width)] + cells))
        return "\n".join(lines)


def rank_aggregate(
    scores,
    higher_is_better: bool = True,
    method_names=None,
    column_names=None,
) -> RankTable:
    """Rank methods within each column and average ranks per method.

    Rank 1 is best; ties share the mean of the tied rank positions.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("scores must be a methods x columns matrix")
    if np.isnan(scores).any():
        raise ValueError("scores matrix has missing cells")
    m, c = scores.shape
    if method_names is None:
        method_names = tuple(f"method{i}" for i in range(m))
    if column_names is None:
        column_names = tuple(f"col{i}" for i in range(c))
    signed = -scores if higher_is_better else scores
    ranks = np.stack([rankdata(signed[:, j], method="average") for j in range(c)], axis=1)
    return RankTable(
        method_names=tuple(method_names),
        column_names=tuple(column_names),
        scores=scores,
        ranks=ranks,
        averages=ranks.mean(axis=1),
    )
