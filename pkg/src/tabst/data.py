"""Tabular dataset containers: CSV ingestion, label masking, folds, binning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"

#: label value marking an unlabeled row
UNLABELED = -1


class SchemaError(ValueError):
    """CSV header or schema definition does not match expectations."""


class ParseError(ValueError):
    """A cell value could not be interpreted under the schema."""


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature columns with kinds, plus the target column and classes."""

    columns: tuple[tuple[str, str], ...]
    target: str
    class_names: tuple[str, ...]

    def __post_init__(self):
        names = [n for n, _ in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        if self.target in names:
            raise SchemaError(f"target column {self.target!r} also listed as a feature")
        if len(self.class_names) < 2:
            raise SchemaError("schema needs at least 2 classes")
        if len(set(self.class_names)) != len(self.class_names):
            raise SchemaError("duplicate class names")
        for name, kind in self.columns:
            if kind not in (CATEGORICAL, CONTINUOUS):
                raise SchemaError(f"column {name!r} has unknown kind {kind!r}")

    @property
    def m(self) -> int:
        return len(self.columns)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.columns)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(k for _, k in self.columns)

    def continuous_indices(self) -> tuple[int, ...]:
        return tuple(j for j, (_, k) in enumerate(self.columns) if k == CONTINUOUS)

    @classmethod
    def from_yaml(cls, path) -> "FeatureSchema":
        with open(path) as fh:
            raw = yaml.safe_load(fh)
        try:
            columns = tuple((c["name"], c["kind"]) for c in raw["columns"])
            return cls(
                columns=columns,
                target=raw["target"],
                class_names=tuple(str(c) for c in raw["classes"]),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema file {path}: {exc}") from exc

    def to_yaml(self, path) -> None:
        doc = {
            "target": self.target,
            "classes": list(self.class_names),
            "columns": [{"name": n, "kind": k} for n, k in self.columns],
        }
        with open(path, "w") as fh:
            yaml.safe_dump(doc, fh, sort_keys=False)


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with optional labels and stable row identities.

    Categorical feature values are stored as float-encoded symbol indices into
    ``categories``; continuous values are stored as-is.  ``labels`` uses
    :data:`UNLABELED` for rows without a label.  ``truth`` optionally carries
    hidden ground-truth labels for pseudo-label auditing.
    """

    schema: FeatureSchema
    X: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray
    categories: tuple[tuple[str, ...], ...] = field(default=())
    truth: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        row_ids = np.asarray(self.row_ids, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", row_ids)
        if self.truth is not None:
            object.__setattr__(self, "truth", np.asarray(self.truth, dtype=np.int64))
        if X.ndim != 2 or X.shape[1] != self.schema.m:
            raise ValueError(
                f"feature matrix has shape {X.shape}, schema expects {self.schema.m} features"
            )
        if labels.shape != (X.shape[0],) or row_ids.shape != (X.shape[0],):
            raise ValueError("labels/row_ids length does not match row count")
        if labels.size and (labels.max(initial=UNLABELED) >= self.schema.n_classes or labels.min(initial=0) < UNLABELED):
            raise ValueError("label index out of range for schema classes")
        if len(np.unique(row_ids)) != len(row_ids):
            raise ValueError("row_ids must be unique")
        if not self.categories:
            object.__setattr__(self, "categories", tuple(() for _ in self.schema.columns))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_classes(self) -> int:
        return self.schema.n_classes

    def labeled_mask(self) -> np.ndarray:
        return self.labels != UNLABELED

    def subset(self, idx, drop_labels: bool = False) -> "Dataset":
        """Row subset preserving row identities.

        With ``drop_labels`` the subset loses its labels but keeps them in the
        hidden ``truth`` field for later auditing.
        """
        idx = np.asarray(idx)
        labels = self.labels[idx]
        truth = self.truth[idx] if self.truth is not None else labels.copy()
        if drop_labels:
            labels = np.full(len(labels), UNLABELED, dtype=np.int64)
        return Dataset(
            schema=self.schema,
            X=self.X[idx],
            labels=labels,
            row_ids=self.row_ids[idx],
            categories=self.categories,
            truth=truth,
        )

    def class_counts(self, labels: np.ndarray | None = None) -> np.ndarray:
        labels = self.labels if labels is None else labels
        labeled = labels[labels != UNLABELED]
        return np.bincount(labeled, minlength=self.n_classes)


@dataclass(frozen=True)
class FoldAssignment:
    """Stratified fold index per row."""

    k: int
    fold: np.ndarray
    seed: int

    def test_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold == f)

    def train_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold != f)


def load_csv(path, schema: FeatureSchema) -> Dataset:
    """Load an RFC-4180-style CSV with a header row under ``schema``.

    An empty string in the target column marks an unlabeled row.  Categorical
    strings are interned to indices in first-appearance order.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        wanted = list(schema.feature_names) + [schema.target]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        col_pos = {c: header.index(c) for c in wanted}

        cats: list[dict[str, int]] = [{} for _ in schema.columns]
        class_index = {c: i for i, c in enumerate(schema.class_names)}
        rows: list[list[float]] = []
        labels: list[int] = []
        for rownum, rec in enumerate(reader, start=1):
            vals = []
            for j, (name, kind) in enumerate(schema.columns):
                cell = rec[col_pos[name]]
                if kind == CONTINUOUS:
                    try:
                        vals.append(float(cell))
                    except ValueError:
                        raise ParseError(
                            f"{path}: row {rownum}: non-numeric value {cell!r} "
                            f"in continuous column {name!r}"
                        ) from None
                else:
                    if cell == "":
                        raise ParseError(
                            f"{path}: row {rownum}: missing value in column {name!r}"
                        )
                    vals.append(cats[j].setdefault(cell, len(cats[j])))
            cell = rec[col_pos[schema.target]]
            if cell == "":
                labels.append(UNLABELED)
            elif cell in class_index:
                labels.append(class_index[cell])
            else:
                raise ParseError(
                    f"{path}: row {rownum}: unknown class {cell!r} in target column"
                )
            rows.append(vals)

    n = len(rows)
    X = np.asarray(rows, dtype=np.float64).reshape(n, schema.m)
    return Dataset(
        schema=schema,
        X=X,
        labels=np.asarray(labels, dtype=np.int64),
        row_ids=np.arange(n, dtype=np.int64),
        categories=tuple(tuple(c) for c in cats),
    )


def save_csv(d: Dataset, path) -> None:
    """Write a Dataset back to CSV in schema column order; inverse of load_csv."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.schema.feature_names) + [d.schema.target])
        for i in range(d.n_rows):
            rec = []
            for j, (_, kind) in enumerate(d.schema.columns):
                v = d.X[i, j]
                if kind == CATEGORICAL:
                    rec.append(d.categories[j][int(v)])
                else:
                    rec.append(repr(float(v)))
            y = d.labels[i]
            rec.append("" if y == UNLABELED else d.schema.class_names[y])
            writer.writerow(rec)


def _stratified_quota(counts: np.ndarray, keep: int) -> np.ndarray:
    """Per-class sample counts proportional to ``counts``, totalling ``keep``.

    Largest-remainder apportionment with a floor of one row per class.
    """
    total = counts.sum()
    present = counts > 0
    n_present = int(present.sum())
    if keep < n_present:
        raise ValueError(f"keep={keep} is below one row per class ({n_present} classes)")
    exact = counts * keep / total
    quota = np.floor(exact).astype(np.int64)
    quota[present] = np.maximum(quota[present], 1)
    rem = keep - quota.sum()
    if rem > 0:
        order = np.argsort(-(exact - np.floor(exact)), kind="stable")
        for c in order:
            if rem == 0:
                break
            if present[c] and quota[c] < counts[c]:
                quota[c] += 1
                rem -= 1
    elif rem < 0:
        order = np.argsort(exact - np.floor(exact), kind="stable")
        for c in order:
            if rem == 0:
                break
            if present[c] and quota[c] > 1:
                quota[c] -= 1
                rem += 1
    if rem != 0:
        raise ValueError(f"cannot apportion keep={keep} across class counts {counts}")
    return quota


def _stratified_pick(labels: np.ndarray, n_classes: int, keep: int, seed: int) -> np.ndarray:
    """Indices of a stratified sample of ``keep`` labeled rows."""
    labeled_idx = np.flatnonzero(labels != UNLABELED)
    counts = np.bincount(labels[labeled_idx], minlength=n_classes)
    quota = _stratified_quota(counts, keep)
    rng = np.random.default_rng(seed)
    picked = []
    for c in range(n_classes):
        rows = np.flatnonzero(labels == c)
        rng.shuffle(rows)
        picked.append(rows[: quota[c]])
    return np.sort(np.concatenate(picked))


def mask_labels(d: Dataset, keep: int, seed: int) -> tuple[Dataset, Dataset]:
    """Split into a stratified labeled partition of ``keep`` rows and the rest.

    The remainder loses its labels but keeps them in the hidden ``truth``
    field so pseudo-labels can be audited later.
    """
    n_labeled = int(d.labeled_mask().sum())
    if keep > n_labeled:
        raise ValueError(f"keep={keep} exceeds labeled row count {n_labeled}")
    picked = _stratified_pick(d.labels, d.n_classes, keep, seed)
    rest = np.setdiff1d(np.arange(d.n_rows), picked)
    return d.subset(picked), d.subset(rest, drop_labels=True)


def stratified_split(d: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split a labeled dataset into (rest, held-out) parts, both keeping labels.

    The held-out part has roughly ``fraction`` of the rows, stratified by class
    with at least one row per class on each side.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    n = d.n_rows
    n_hold = min(max(int(round(n * fraction)), d.n_classes), n - d.n_classes)
    held = _stratified_pick(d.labels, d.n_classes, n_hold, seed)
    rest = np.setdiff1d(np.arange(n), held)
    return d.subset(rest), d.subset(held)


def stratified_kfold(d: Dataset, k: int, seed: int) -> FoldAssignment:
    """Deterministic stratified k-fold assignment.

    Rows of each class are shuffled by ``seed`` and dealt round-robin into
    folds, so per-fold class proportions differ from global ones by at most
    one row.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    counts = d.class_counts()
    for c in range(d.n_classes):
        if 0 < counts[c] < k:
            raise ValueError(
                f"class {d.schema.class_names[c]!r} has only {counts[c]} rows, "
                f"fewer than k={k}"
            )
    rng = np.random.default_rng(seed)
    fold = np.empty(d.n_rows, dtype=np.int64)
    groups = [np.flatnonzero(d.labels == c) for c in range(d.n_classes)]
    unlabeled = np.flatnonzero(d.labels == UNLABELED)
    if unlabeled.size:
        groups.append(unlabeled)
    for rows in groups:
        rows = rows.copy()
        rng.shuffle(rows)
        fold[rows] = np.arange(len(rows)) % k
    return FoldAssignment(k=k, fold=fold, seed=seed)


def fit_bin_edges(values, n_bins: int = 10) -> np.ndarray:
    """Equal-width bin edges spanning [min, max] of the pooled values.

    A constant column yields the degenerate two-element edge array
    ``[v, v]`` describing a single bin.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot fit bin edges on empty values")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return np.array([lo, hi])
    return np.linspace(lo, hi, n_bins + 1)


def n_bins_of(edges: np.ndarray) -> int:
    if len(edges) == 2 and edges[0] == edges[1]:
        return 1
    return len(edges) - 1


def digitize(value: float, edges: np.ndarray) -> int:
    """Bin index for ``value`` under half-open bins, last bin closed.

    Out-of-range values clip to the edge bins, so this is a total function.
    """
    nb = n_bins_of(edges)
    if nb == 1:
        return 0
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    return min(max(idx, 0), nb - 1)


def digitize_array(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    nb = n_bins_of(edges)
    if nb == 1:
        return np.zeros(len(values), dtype=np.int64)
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, nb - 1).astype(np.int64)


def compute_bin_edges(pools, n_bins: int = 10) -> dict[int, np.ndarray]:
    """Fit per-feature bin edges for continuous columns over pooled datasets."""
    pools = list(pools)
    if not pools:
        raise ValueError("need at least one dataset to fit bin edges")
    schema = pools[0].schema
    edges = {}
    for j in schema.continuous_indices():
        vals = np.concatenate([p.X[:, j] for p in pools if p.n_rows]) if any(
            p.n_rows for p in pools
        ) else np.array([])
        edges[j] = fit_bin_edges(vals, n_bins)
    return edges
