"""Multinomial logistic regression by full-batch gradient descent.

Features are standardized internally with training-set statistics.  Weights
start at zero, so the optimization (and reinitialization) is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from .base import BaseClassifier, PatienceTracker, check_training_data, validation_metric


@dataclass(frozen=True)
class LogRegParams:
    learning_rate: float = 0.1
    max_epochs: int = 500
    l2: float = 0.0
    patience: int = 50

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    np.exp(Z, out=Z)
    Z /= Z.sum(axis=1, keepdims=True)
    return Z


def loss_and_grad(W: np.ndarray, X1: np.ndarray, Y: np.ndarray, l2: float, w=None):
    """Weighted mean cross-entropy with L2 on the non-bias rows, and its gradient.

    ``X1`` carries a trailing all-ones bias column; ``Y`` is one-hot.
    """
    n = X1.shape[0]
    if w is None:
        w = np.ones(n)
    wsum = w.sum()
    P = _softmax(X1 @ W)
    eps = 1e-15
    loss = -float(np.sum(w * np.sum(Y * np.log(P + eps), axis=1)) / wsum)
    reg = W.copy()
    reg[-1, :] = 0.0
    loss += 0.5 * l2 * float(np.sum(reg * reg))
    grad = X1.T @ ((P - Y) * w[:, None]) / wsum + l2 * reg
    return loss, grad


class LogReg(BaseClassifier):
    kind = "logreg"

    def __init__(self, params: LogRegParams | None = None, seed: int = 0):
        super().__init__(params or LogRegParams(), seed)
        self.W_ = None
        self.mu_ = None
        self.sigma_ = None

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mu_) / self.sigma_

    def fit(self, train: Dataset, valid: Dataset, sample_weight=None) -> "LogReg":
        check_training_data(train, valid)
        p = self.params
        X, y = train.X, train.labels
        n, m = X.shape
        K = train.n_classes
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, float)
        self.mu_ = X.mean(axis=0)
        sigma = X.std(axis=0)
        self.sigma_ = np.where(sigma > 0, sigma, 1.0)
        X1 = np.column_stack([self._standardize(X), np.ones(n)])
        Xv1 = np.column_stack([self._standardize(valid.X), np.ones(valid.n_rows)])
        Y = np.zeros((n, K))
        Y[np.arange(n), y] = 1.0

        W = np.zeros((m + 1, K))
        best_W = W.copy()
        tracker = PatienceTracker(p.patience)
        self.trace_ = []
        for epoch in range(p.max_epochs):
            _, grad = loss_and_grad(W, X1, Y, p.l2, w)
            W = W - p.learning_rate * grad
            score = validation_metric(valid.labels, np.argmax(Xv1 @ W, axis=1), K)
            self.trace_.append(score)
            if tracker.update(score, epoch):
                best_W = W.copy()
            if tracker.should_stop():
                break
        self.W_ = best_W
        self.n_classes_ = K
        self.train_row_ids_ = train.row_ids.copy()
        self.fitted = True
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        self._require_fitted()
        X = np.asarray(X, dtype=np.float64)
        X1 = np.column_stack([self._standardize(X), np.ones(X.shape[0])])
        return _softmax(X1 @ self.W_)

    def feature_importances(self):
        if self.W_ is None:
            return None
        return np.abs(self.W_[:-1, :]).sum(axis=1)

    def _state_dict(self) -> dict:
        return {
            "W": self.W_.tolist(),
            "mu": self.mu_.tolist(),
            "sigma": self.sigma_.tolist(),
        }

    def _load_state(self, state: dict) -> None:
        self.W_ = np.asarray(state["W"], dtype=np.float64)
        self.mu_ = np.asarray(state["mu"], dtype=np.float64)
        self.sigma_ = np.asarray(state["sigma"], dtype=np.float64)
