"""Classifier handle shared by the built-in learners.

A handle owns hyperparameters and a seed; fitted state exists only after
``fit`` and is discarded by ``reinitialize``.  Training stops early when the
validation metric (macro-F1) has not improved for ``patience`` rounds, and the
fitted state always corresponds to the best validation round.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .. import metrics
from ..data import UNLABELED, Dataset

MODEL_FORMAT = "tabst-model"
MODEL_VERSION = 1


class NotFittedError(RuntimeError):
    """predict was called on an unfitted handle."""


class PatienceTracker:
    """Early-stopping bookkeeping: best round and rounds since improvement."""

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError("patience must be >= 1")
        self.patience = patience
        self.best = -np.inf
        self.best_round = -1
        self.since_best = 0

    def update(self, value: float, round_idx: int) -> bool:
        if value > self.best:
            self.best = value
            self.best_round = round_idx
            self.since_best = 0
            return True
        self.since_best += 1
        return False

    def should_stop(self) -> bool:
        return self.since_best >= self.patience


def validation_metric(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    cm = metrics.ConfusionMatrix.from_labels(y_true, y_pred, n_classes)
    return metrics.macro_f1(cm)


def check_training_data(train: Dataset, valid: Dataset) -> None:
    if train.n_rows == 0:
        raise ValueError("training set is empty")
    if valid.n_rows == 0:
        raise ValueError("validation set is empty")
    if (train.labels == UNLABELED).any() or (valid.labels == UNLABELED).any():
        raise ValueError("training and validation sets must be fully labeled")
    counts = train.class_counts()
    for c in range(train.n_classes):
        if counts[c] == 0:
            raise ValueError(
                f"class {train.schema.class_names[c]!r} missing from training set"
            )


class BaseClassifier:
    kind = ""

    def __init__(self, params, seed: int = 0):
        self.params = params
        self.seed = seed
        self.fitted = False
        self.n_classes_ = None
        self.train_row_ids_ = None
        self.trace_ = []

    def fit(self, train: Dataset, valid: Dataset, sample_weight=None) -> "BaseClassifier":
        raise NotImplementedError

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        # argmax breaks ties toward the lowest class index
        return np.argmax(self.predict_proba(X), axis=1)

    def feature_importances(self):
        return None

    def reinitialize(self, seed: int) -> "BaseClassifier":
        """Fresh handle with the same hyperparameters and no fitted state."""
        return type(self)(self.params, seed=seed)

    def _require_fitted(self) -> None:
        if not self.fitted:
            raise NotFittedError(f"{type(self).__name__} is not fitted")

    # -- serialization ----------------------------------------------------

    def _state_dict(self) -> dict:
        raise NotImplementedError

    def _load_state(self, state: dict) -> None:
        raise NotImplementedError

    def save(self, path) -> None:
        self._require_fitted()
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "seed": self.seed,
            "params": asdict(self.params),
            "n_classes": self.n_classes_,
            "state": self._state_dict(),
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)


def load_model(path) -> BaseClassifier:
    from . import make_learner

    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    model = make_learner(doc["kind"], seed=doc["seed"], **doc["params"])
    model.n_classes_ = doc["n_classes"]
    model._load_state(doc["state"])
    model.fitted = True
    return model
