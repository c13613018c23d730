"""Per-class empirical feature likelihoods with caching and min-max scaling.

Features are assumed independent given the class, so a row's likelihood is the
product of per-feature table lookups; everything is done in log space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import yaml

from .data import CATEGORICAL, UNLABELED, Dataset, digitize_array, n_bins_of


@dataclass(frozen=True)
class LikelihoodModel:
    """Smoothed per-class, per-feature discrete probability tables.

    ``tables[j]`` has shape (n_classes, V_j) where V_j is the number of
    categories or bins of feature j.  Continuous features are digitized with
    ``bin_edges`` before lookup.
    """

    tables: tuple[np.ndarray, ...]
    bin_edges: dict[int, np.ndarray]
    smoothing: float
    selected: tuple[int, ...]
    class_counts: np.ndarray
    n_classes: int

    def __post_init__(self):
        if not self.selected:
            raise ValueError("selected feature set must be non-empty")
        for j, t in enumerate(self.tables):
            sums = t.sum(axis=1)
            if not np.allclose(sums, 1.0, atol=1e-9):
                raise ValueError(f"probability table of feature {j} does not sum to 1")


@dataclass(frozen=True)
class LikelihoodCache:
    """Raw log-likelihoods per (row, class) plus their min-max scaled values."""

    raw: np.ndarray
    gamma: np.ndarray
    row_ids: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.raw.shape[0]


def _feature_cardinality(d: Dataset, j: int, edges: dict[int, np.ndarray]) -> int:
    if d.schema.columns[j][1] == CATEGORICAL:
        if d.categories[j]:
            return len(d.categories[j])
        return int(d.X[:, j].max(initial=0)) + 1
    return n_bins_of(edges[j])


def _discretize_column(d: Dataset, j: int, edges: dict[int, np.ndarray]) -> np.ndarray:
    if d.schema.columns[j][1] == CATEGORICAL:
        return d.X[:, j].astype(np.int64)
    return digitize_array(d.X[:, j], edges[j])


def fit_likelihood(
    labeled: Dataset,
    smoothing: float = 1.0,
    selected=None,
    bin_edges: dict[int, np.ndarray] | None = None,
    n_bins: int = 10,
) -> LikelihoodModel:
    """Fit the empirical tables on a labeled dataset.

    Each cell is (count(value, class) + s) / (count(class) + s * V), i.e.
    additive smoothing with constant ``s``.  ``bin_edges`` defaults to
    equal-width edges fit on the labeled data itself; pass pooled edges when
    unlabeled data should contribute to the binning.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    from .data import compute_bin_edges

    if bin_edges is None:
        bin_edges = compute_bin_edges([labeled], n_bins)
    K = labeled.n_classes
    y = labeled.labels
    if (y == UNLABELED).any():
        raise ValueError("fit_likelihood expects a fully labeled dataset")
    counts = labeled.class_counts()
    for c in range(K):
        if counts[c] == 0:
            raise ValueError(
                f"class {labeled.schema.class_names[c]!r} has no labeled rows"
            )
    m = labeled.schema.m
    if selected is None:
        selected = tuple(range(m))
    else:
        selected = tuple(sorted(set(int(j) for j in selected)))

    tables = []
    for j in range(m):
        V = _feature_cardinality(labeled, j, bin_edges)
        vals = _discretize_column(labeled, j, bin_edges)
        table = np.zeros((K, V), dtype=np.float64)
        np.add.at(table, (y, vals), 1.0)
        table = (table + smoothing) / (counts[:, None] + smoothing * V)
        tables.append(table)
    return LikelihoodModel(
        tables=tuple(tables),
        bin_edges=bin_edges,
        smoothing=smoothing,
        selected=selected,
        class_counts=counts,
        n_classes=K,
    )


def _log_table(table: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(table)


def log_likelihood_matrix(model: LikelihoodModel, d: Dataset) -> np.ndarray:
    """Raw log-likelihood of every row under every class, shape (N, K).

    Cells for unseen values under zero smoothing are -inf.
    """
    n = d.n_rows
    out = np.zeros((n, model.n_classes), dtype=np.float64)
    for j in model.selected:
        table = model.tables[j]
        vals = _discretize_column(d, j, model.bin_edges)
        # values outside the fitted table count as unseen
        oob = vals >= table.shape[1]
        safe = np.where(oob, 0, vals)
        logp = _log_table(table)[:, safe].T
        if oob.any():
            with np.errstate(divide="ignore"):
                unseen = np.log(
                    model.smoothing
                    / (model.class_counts + model.smoothing * table.shape[1])
                )
            logp[oob] = unseen
        out += logp
    return out


def log_likelihood(model: LikelihoodModel, x, y: int) -> float:
    """Sum of log P(x_j | y) over the selected features."""
    d = _single_row_dataset(model, x)
    return float(log_likelihood_matrix(model, d)[0, y])


def _single_row_dataset(model: LikelihoodModel, x) -> Dataset:
    # lightweight wrapper so scalar lookups share the vectorized path
    from .data import Dataset as _DS, FeatureSchema

    m = len(model.tables)
    columns = tuple(
        ("x%d" % j, "continuous" if j in model.bin_edges else "categorical")
        for j in range(m)
    )
    schema = FeatureSchema(
        columns=columns,
        target="y",
        class_names=tuple("c%d" % c for c in range(model.n_classes)),
    )
    return _DS(
        schema=schema,
        X=np.asarray(x, dtype=np.float64).reshape(1, m),
        labels=np.array([UNLABELED]),
        row_ids=np.array([0]),
    )


def minmax_scale(raw: np.ndarray) -> np.ndarray:
    """Min-max scale a raw log-likelihood population into [0, 1].

    A constant population scales to all ones, so regularization becomes a
    no-op instead of zeroing every score.  -inf cells scale to 0.
    """
    if raw.size == 0:
        return raw.copy()
    finite = np.isfinite(raw)
    if not finite.any():
        return np.zeros_like(raw)
    lo = raw[finite].min()
    hi = raw[finite].max()
    if hi == lo:
        gamma = np.ones_like(raw)
    else:
        gamma = (raw - lo) / (hi - lo)
    gamma[~finite] = 0.0
    return np.clip(gamma, 0.0, 1.0)


def build_cache(model: LikelihoodModel, unlabeled: Dataset) -> LikelihoodCache:
    """Precompute log-likelihoods of the unlabeled pool for every class.

    Scaling is over the entire (rows x classes) population so scores stay
    comparable across classes.
    """
    if unlabeled.n_rows == 0:
        empty = np.zeros((0, model.n_classes))
        return LikelihoodCache(raw=empty, gamma=empty.copy(), row_ids=unlabeled.row_ids)
    raw = log_likelihood_matrix(model, unlabeled)
    return LikelihoodCache(raw=raw, gamma=minmax_scale(raw), row_ids=unlabeled.row_ids)


def select_features(learner, m: int, k: int | None) -> tuple[int, ...]:
    """Top-k features by the trained learner's importances.

    Ties break toward the lower feature index; ``k`` is clipped to ``m``.
    A learner without importances falls back to all features with a warning.
    """
    if k is None:
        return tuple(range(m))
    k = min(int(k), m)
    if k < 1:
        raise ValueError("k must be >= 1")
    imp = learner.feature_importances()
    if imp is None:
        warnings.warn("learner has no feature importances; using all features")
        return tuple(range(m))
    imp = np.asarray(imp, dtype=np.float64)
    order = np.lexsort((np.arange(m), -imp))
    return tuple(sorted(int(j) for j in order[:k]))


def dump_tables(model: LikelihoodModel, schema, path) -> None:
    """Write the fitted tables to YAML as class -> feature -> value -> prob."""
    doc = {}
    for c, cls in enumerate(schema.class_names):
        feat = {}
        for j in model.selected:
            name = schema.columns[j][0]
            feat[name] = {
                int(v): float(model.tables[j][c, v])
                for v in range(model.tables[j].shape[1])
            }
        doc[cls] = feat
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)
