"""Pseudo-label scoring and selection strategies.

The score of a candidate is the classifier confidence ``c`` optionally
regularized by the scaled log-likelihood ``gamma`` of its pseudo-label:
``f = (alpha * gamma + 1) * c / (alpha + 1)``, which stays in [0, 1] and
collapses to ``c`` when ``alpha`` is 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

FPL = "fpl"
R_FPL = "r-fpl"
CPL = "cpl"
R_CPL = "r-cpl"
NAIVE = "naive"

STRATEGIES = (FPL, R_FPL, CPL, R_CPL, NAIVE)
REGULARIZED = (R_FPL, R_CPL)
CURRICULUM = (CPL, R_CPL)


@dataclass(frozen=True)
class LabelerConfig:
    strategy: str = FPL
    threshold: float = 0.6
    initial_percent: float = 20.0
    step_percent: float = 20.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must be in [0, 1]")
        if not 0 < self.initial_percent <= 100:
            raise ValueError("initial_percent must be in (0, 100]")
        if self.step_percent <= 0:
            raise ValueError("step_percent must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    @property
    def regularized(self) -> bool:
        return self.strategy in REGULARIZED

    @property
    def curriculum(self) -> bool:
        return self.strategy in CURRICULUM


@dataclass(frozen=True)
class PseudoLabelBatch:
    """Selected pseudo-labels of one cycle, with their score components."""

    row_ids: np.ndarray
    labels: np.ndarray
    confidence: np.ndarray
    gamma: np.ndarray
    score: np.ndarray
    strategy: str = FPL
    cycle: int = 0

    def __post_init__(self):
        if len(np.unique(self.row_ids)) != len(self.row_ids):
            raise ValueError("duplicate row_ids in pseudo-label batch")

    def __len__(self) -> int:
        return len(self.row_ids)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row_id", "label", "confidence", "gamma", "score"])
            for i in range(len(self)):
                writer.writerow(
                    [
                        int(self.row_ids[i]),
                        int(self.labels[i]),
                        repr(float(self.confidence[i])),
                        repr(float(self.gamma[i])),
                        repr(float(self.score[i])),
                    ]
                )


#: scored candidates are a full-pool PseudoLabelBatch before selection
ScoredCandidates = PseudoLabelBatch


def regularized_score(c: float, gamma: float, alpha: float) -> float:
    """Eq.-style regularized confidence: (alpha*gamma + 1) * c / (alpha + 1)."""
    if not 0 <= c <= 1:
        raise ValueError("confidence must be in [0, 1]")
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must be in [0, 1]")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return (alpha * gamma + 1.0) * c / (alpha + 1.0)


def score_batch(proba: np.ndarray, row_ids: np.ndarray, gamma_matrix=None, alpha: float = 0.0) -> ScoredCandidates:
    """Score every unlabeled row: label = argmax class, c = max probability.

    ``gamma_matrix`` rows must align with ``proba`` rows; when absent, gamma
    defaults to 1 and the score equals the confidence.
    """
    proba = np.asarray(proba, dtype=np.float64)
    row_ids = np.asarray(row_ids, dtype=np.int64)
    if proba.ndim != 2 or proba.shape[0] != len(row_ids):
        raise ValueError("probability matrix does not align with row_ids")
    labels = np.argmax(proba, axis=1)
    conf = proba[np.arange(len(labels)), labels]
    if gamma_matrix is None:
        gamma = np.ones(len(labels))
    else:
        gamma_matrix = np.asarray(gamma_matrix, dtype=np.float64)
        if gamma_matrix.shape != proba.shape:
            raise ValueError("gamma matrix does not align with probability matrix")
        gamma = gamma_matrix[np.arange(len(labels)), labels]
    score = (alpha * gamma + 1.0) * conf / (alpha + 1.0)
    return ScoredCandidates(
        row_ids=row_ids,
        labels=labels,
        confidence=conf,
        gamma=gamma,
        score=score,
    )


def _take(cands: ScoredCandidates, mask: np.ndarray, strategy: str, cycle: int) -> PseudoLabelBatch:
    return PseudoLabelBatch(
        row_ids=cands.row_ids[mask],
        labels=cands.labels[mask],
        confidence=cands.confidence[mask],
        gamma=cands.gamma[mask],
        score=cands.score[mask],
        strategy=strategy,
        cycle=cycle,
    )


def select_fixed_threshold(cands: ScoredCandidates, tau: float, strategy: str = FPL, cycle: int = 0) -> PseudoLabelBatch:
    """Rows whose score is >= tau (inclusive comparison)."""
    return _take(cands, cands.score >= tau, strategy, cycle)


def select_top_count(cands: ScoredCandidates, n: int, strategy: str = CPL, cycle: int = 0) -> PseudoLabelBatch:
    """The n highest-scoring rows, including every row tied with the cutoff."""
    total = len(cands)
    if total == 0 or n <= 0:
        return _take(cands, np.zeros(total, dtype=bool), strategy, cycle)
    n = min(n, total)
    cutoff = np.sort(cands.score)[::-1][n - 1]
    return _take(cands, cands.score >= cutoff, strategy, cycle)


def select_curriculum(cands: ScoredCandidates, r_percent: float, strategy: str = CPL, cycle: int = 0) -> PseudoLabelBatch:
    """The top ceil(r% of the pool) rows by score, ties at the cutoff included."""
    if not 0 < r_percent <= 100:
        raise ValueError("r_percent must be in (0, 100]")
    n = math.ceil(r_percent / 100.0 * len(cands))
    return select_top_count(cands, n, strategy, cycle)


def select_naive(cands: ScoredCandidates, cycle: int = 0) -> PseudoLabelBatch:
    """Accept every pseudo-label regardless of score."""
    return _take(cands, np.ones(len(cands), dtype=bool), NAIVE, cycle)
