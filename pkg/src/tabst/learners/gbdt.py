"""Gradient-boosted decision trees on multiclass log-loss, exact splits.

One regression tree per class per round is fit to the softmax residuals
(one-hot minus predicted probability), the classic multiclass boosting
recipe.  Split search is exhaustive over sorted feature values, so results
are deterministic for a fixed seed and dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from .base import BaseClassifier, PatienceTracker, check_training_data, validation_metric

_EPS = 1e-12


@dataclass(frozen=True)
class GbdtParams:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_depth: int = 6
    min_samples_leaf: int = 1
    patience: int = 50

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def _best_split(x: np.ndarray, wr: np.ndarray, w: np.ndarray, min_leaf: int):
    """Best threshold on one feature by weighted squared-error reduction.

    Returns (gain, threshold) or None when no split is admissible.
    """
    n = len(x)
    if n < 2 * min_leaf:
        return None
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cw = np.cumsum(w[order])
    cs = np.cumsum(wr[order])
    W, S = cw[-1], cs[-1]
    if W <= 0:
        return None
    base = S * S / W
    # candidate split after position i (left = [0..i]), respecting min_leaf
    i = np.arange(n - 1)
    ok = (xs[:-1] < xs[1:]) & (i + 1 >= min_leaf) & (n - 1 - i >= min_leaf)
    if not ok.any():
        return None
    wl = cw[:-1]
    sl = cs[:-1]
    wr_ = W - wl
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(
            ok & (wl > 0) & (wr_ > 0),
            sl * sl / np.maximum(wl, _EPS) + (S - sl) ** 2 / np.maximum(wr_, _EPS) - base,
            -np.inf,
        )
    pos = int(np.argmax(gain))
    if not np.isfinite(gain[pos]) or gain[pos] <= 0:
        return None
    return float(gain[pos]), float((xs[pos] + xs[pos + 1]) / 2)


def _leaf_value(r: np.ndarray, w: np.ndarray, k_classes: int) -> float:
    num = float(np.sum(w * r))
    den = float(np.sum(w * np.abs(r) * (1.0 - np.abs(r))))
    if den < _EPS:
        return 0.0
    return (k_classes - 1) / k_classes * num / den


def _build_tree(
    X: np.ndarray,
    r: np.ndarray,
    w: np.ndarray,
    idx: np.ndarray,
    depth: int,
    params: GbdtParams,
    k_classes: int,
    pred: np.ndarray,
    importances: np.ndarray,
) -> dict:
    """Recursive exact-split regression tree; fills ``pred`` on the way down."""
    if depth >= params.max_depth or len(idx) < 2 * params.min_samples_leaf:
        value = _leaf_value(r[idx], w[idx], k_classes)
        pred[idx] = value
        return {"value": value}
    wr = w[idx] * r[idx]
    best_gain, best_feat, best_thr = 0.0, None, None
    for j in range(X.shape[1]):
        found = _best_split(X[idx, j], wr, w[idx], params.min_samples_leaf)
        if found is not None and found[0] > best_gain:
            best_gain, best_feat, best_thr = found[0], j, found[1]
    if best_feat is None:
        value = _leaf_value(r[idx], w[idx], k_classes)
        pred[idx] = value
        return {"value": value}
    importances[best_feat] += best_gain
    left = idx[X[idx, best_feat] < best_thr]
    right = idx[X[idx, best_feat] >= best_thr]
    return {
        "feature": best_feat,
        "threshold": best_thr,
        "left": _build_tree(X, r, w, left, depth + 1, params, k_classes, pred, importances),
        "right": _build_tree(X, r, w, right, depth + 1, params, k_classes, pred, importances),
    }


def _tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if "value" in node:
            out[idx] = node["value"]
            continue
        mask = X[idx, node["feature"]] < node["threshold"]
        stack.append((node["left"], idx[mask]))
        stack.append((node["right"], idx[~mask]))
    return out


def _softmax(F: np.ndarray) -> np.ndarray:
    Z = F - F.max(axis=1, keepdims=True)
    np.exp(Z, out=Z)
    Z /= Z.sum(axis=1, keepdims=True)
    return Z


class Gbdt(BaseClassifier):
    kind = "gbdt"

    def __init__(self, params: GbdtParams | None = None, seed: int = 0):
        super().__init__(params or GbdtParams(), seed)
        self.rounds_ = []
        self.importances_ = None

    def fit(self, train: Dataset, valid: Dataset, sample_weight=None) -> "Gbdt":
        check_training_data(train, valid)
        p = self.params
        X, y = train.X, train.labels
        n, m = X.shape
        K = train.n_classes
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, float)
        Y = np.zeros((n, K))
        Y[np.arange(n), y] = 1.0

        F = np.zeros((n, K))
        Fv = np.zeros((valid.n_rows, K))
        idx = np.arange(n)
        importances = np.zeros(m)
        tracker = PatienceTracker(p.patience)
        rounds = []
        self.trace_ = []
        for t in range(p.n_trees):
            P = _softmax(F)
            round_trees = []
            for k in range(K):
                r = Y[:, k] - P[:, k]
                pred = np.empty(n)
                tree = _build_tree(X, r, w, idx, 0, p, K, pred, importances)
                F[:, k] += p.learning_rate * pred
                Fv[:, k] += p.learning_rate * _tree_predict(tree, valid.X)
                round_trees.append(tree)
            rounds.append(round_trees)
            score = validation_metric(valid.labels, np.argmax(Fv, axis=1), K)
            self.trace_.append(score)
            tracker.update(score, t)
            if tracker.should_stop():
                break
        self.rounds_ = rounds[: tracker.best_round + 1]
        self.importances_ = importances
        self.n_classes_ = K
        self.train_row_ids_ = train.row_ids.copy()
        self.fitted = True
        return self

    def _raw_scores(self, X: np.ndarray) -> np.ndarray:
        F = np.zeros((X.shape[0], self.n_classes_))
        for round_trees in self.rounds_:
            for k, tree in enumerate(round_trees):
                F[:, k] += self.params.learning_rate * _tree_predict(tree, X)
        return F

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        self._require_fitted()
        return _softmax(self._raw_scores(np.asarray(X, dtype=np.float64)))

    def feature_importances(self):
        if self.importances_ is None:
            return None
        total = self.importances_.sum()
        if total <= 0:
            return np.full_like(self.importances_, 1.0 / len(self.importances_))
        return self.importances_ / total

    def _state_dict(self) -> dict:
        return {
            "rounds": self.rounds_,
            "importances": self.importances_.tolist(),
        }

    def _load_state(self, state: dict) -> None:
        self.rounds_ = state["rounds"]
        self.importances_ = np.asarray(state["importances"], dtype=np.float64)
