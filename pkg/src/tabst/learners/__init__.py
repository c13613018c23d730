"""Base classifiers for the self-training cycle."""

from .base import BaseClassifier, NotFittedError, PatienceTracker, load_model
from .gbdt import Gbdt, GbdtParams
from .logreg import LogReg, LogRegParams

__all__ = [
    "BaseClassifier",
    "Gbdt",
    "GbdtParams",
    "LogReg",
    "LogRegParams",
    "NotFittedError",
    "PatienceTracker",
    "load_model",
    "make_learner",
]


def make_learner(kind: str, seed: int = 0, **params) -> BaseClassifier:
    if kind == "gbdt":
        return Gbdt(GbdtParams(**params), seed=seed)
    if kind == "logreg":
        return LogReg(LogRegParams(**params), seed=seed)
    raise ValueError(f"unknown learner kind {kind!r}")
