"""Binary datasets: ingestion, synthetic generation, resampling, folds, scaling, PCA."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import RandomStream


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with binary labels (1 = positive / minority)."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    feature_names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DatasetError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features contain non-finite values")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise DatasetError("labels must be in {0, 1}")
        X = X.copy()
        X.setflags(write=False)
        y = y.astype(np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return self.n - self.n_pos

    @property
    def imbalance_ratio(self) -> float:
        return self.n_neg / self.n_pos if self.n_pos else math.inf

    def positives(self) -> np.ndarray:
        return self.features[self.labels == 1]

    def negatives(self) -> np.ndarray:
        return self.features[self.labels == 0]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], name or self.name, self.feature_names)

    def with_features(self, X, name: str | None = None) -> "Dataset":
        return Dataset(X, self.labels, name or self.name)

    def require_both_classes(self, what: str = "dataset") -> None:
        if self.n_pos == 0 or self.n_neg == 0:
            raise DatasetError(f"{what} must contain both classes (pos={self.n_pos}, neg={self.n_neg})")


def data_dir() -> Path:
    return Path(os.environ.get("IMB_DATA_DIR", "./data"))


def load_csv(path, label_column: str | int = "label", name: str | None = None) -> Dataset:
    """Read a headed CSV; every non-label column is a real-valued feature."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column.lstrip("-").isdigit()
                                         and label_column not in header):
        li = int(label_column)
        if not -len(header) <= li < len(header):
            raise DatasetError(f"{path}: label column index {li} out of range")
        li %= len(header)
    else:
        if label_column not in header:
            raise DatasetError(f"{path}: no label column {label_column!r} in header")
        li = header.index(label_column)
    feat_cols = [j for j in range(len(header)) if j != li]
    X = np.empty((len(rows) - 1, len(feat_cols)))
    y = np.empty(len(rows) - 1, dtype=np.int64)
    for i, row in enumerate(rows[1:]):
        lineno = i + 2
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}")
        try:
            lab = float(row[li])
        except ValueError:
            raise DatasetError(f"{path}: row {lineno}, column {header[li]!r}: non-numeric label {row[li]!r}") from None
        if lab not in (0.0, 1.0):
            raise DatasetError(f"{path}: row {lineno}: label {row[li]!r} outside {{0, 1}}")
        y[i] = int(lab)
        for k, j in enumerate(feat_cols):
            try:
                X[i, k] = float(row[j])
            except ValueError:
                raise DatasetError(f"{path}: row {lineno}, column {header[j]!r}: cannot parse {row[j]!r}") from None
    if X.shape[0] == 0:
        raise DatasetError(f"{path}: no data rows")
    return Dataset(X, y, name or path.stem, tuple(header[j] for j in feat_cols))


def dataset_to_rows(ds: Dataset) -> tuple[list[str], list[list[str]]]:
    names = ds.feature_names or tuple(f"x{j + 1}" for j in range(ds.dim))
    rows = [[repr(float(v)) for v in x] + [str(int(l))] for x, l in zip(ds.features, ds.labels)]
    return [*names, "label"], rows


@dataclass(frozen=True)
class GenSpec:
    dims: int
    n_negative: int
    imbalance_ratio: float

    @property
    def n_positive(self) -> int:
        return int(round(self.n_negative / self.imbalance_ratio))

    def validate(self) -> None:
        if self.dims < 1 or self.n_negative < 1:
            raise DatasetError("dims and n_negative must be positive")
        if not self.imbalance_ratio > 1:
            raise DatasetError("imbalance_ratio must exceed 1")
        if self.n_positive < 2:
            raise DatasetError(f"IR {self.imbalance_ratio} leaves {self.n_positive} positives; need at least 2")


def generate_synthetic(spec: GenSpec, stream: RandomStream, separation: float = 2.0) -> Dataset:
    """Two unit-covariance Gaussian clusters, then positive subsampling to hit the IR.

    Cluster means sit at ``-/+ separation/2`` along a random unit direction, so
    every coordinate carries the same (small) share of the signal.
    """
    spec.validate()
    D, n = spec.dims, spec.n_negative
    u = stream.normal(0.0, 1.0, D)
    u /= np.linalg.norm(u)
    neg = stream.normal(0.0, 1.0, (n, D)) - 0.5 * separation * u
    pos = stream.normal(0.0, 1.0, (n, D)) + 0.5 * separation * u
    balanced = Dataset(np.vstack([neg, pos]), np.r_[np.zeros(n), np.ones(n)],
                       f"syn_D{D}_n{n}_IR{spec.imbalance_ratio:g}")
    return subsample_to_ir(balanced, spec.imbalance_ratio, stream)


def subsample_to_ir(ds: Dataset, ir: float, stream: RandomStream) -> Dataset:
    """Drop positives uniformly at random (without replacement) until |S0|/|S1| = ir."""
    target = int(round(ds.n_neg / ir))
    if target < 2:
        raise DatasetError(f"IR {ir} leaves {target} positives; need at least 2")
    if target > ds.n_pos:
        raise DatasetError(f"IR {ir} needs {target} positives but only {ds.n_pos} available")
    neg_idx = np.flatnonzero(ds.labels == 0)
    pos_idx = np.flatnonzero(ds.labels == 1)
    keep = np.sort(pos_idx[stream.choice(pos_idx.size, target, replace=False)])
    return ds.subset(np.r_[neg_idx, keep])


def stratified_kfold(ds: Dataset, k: int, stream: RandomStream) -> np.ndarray:
    """Fold index per row; each class is shuffled and dealt round-robin."""
    if k < 2:
        raise DatasetError("k must be at least 2")
    folds = np.empty(ds.n, dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(ds.labels == cls)
        if idx.size < k:
            raise DatasetError(f"class {cls} has {idx.size} members, fewer than k={k}")
        perm = idx[stream.permutation(idx.size)]
        # continue dealing where the previous class stopped so fold sizes stay even
        folds[perm] = (np.arange(idx.size) + offset) % k
        offset = (offset + idx.size) % k
    return folds


def fold_split(ds: Dataset, folds: np.ndarray, f: int) -> tuple[Dataset, Dataset]:
    test = folds == f
    return ds.subset(np.flatnonzero(~test)), ds.subset(np.flatnonzero(test))


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    sd: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "sd": self.sd.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.asarray(d["mean"], float), np.asarray(d["sd"], float))


def fit_scaler(ds: Dataset) -> ScalerParams:
    if ds.n < 2:
        raise DatasetError("need at least 2 rows to fit a scaler")
    return ScalerParams(ds.features.mean(axis=0), ds.features.std(axis=0))


def apply_scaler(params: ScalerParams, ds: Dataset) -> Dataset:
    return ds.with_features(scale_features(params, ds.features))


def scale_features(params: ScalerParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != params.mean.shape[0]:
        raise DatasetError(f"feature count {X.shape[1]} != scaler width {params.mean.shape[0]}")
    safe = np.where(params.sd > 0, params.sd, 1.0)
    Z = (X - params.mean) / safe
    Z[:, params.sd == 0] = 0.0
    return Z


def pca_basis(X, d: int) -> np.ndarray:
    """Top-``d`` principal axes of ``X`` as orthonormal columns (D x d)."""
    X = np.asarray(X, dtype=float)
    n, D = X.shape
    if d > D:
        raise DatasetError(f"cannot keep {d} components of {D}-dimensional data")
    if n < 2:
        raise DatasetError("PCA needs at least 2 rows")
    Xc = X - X.mean(axis=0)
    _, _, Vt = np.linalg.svd(Xc, full_matrices=True)
    basis = Vt[:d].T
    # sign convention: largest-magnitude loading of each axis is positive
    flip = np.sign(basis[np.abs(basis).argmax(axis=0), np.arange(d)])
    flip[flip == 0] = 1.0
    return basis * flip


def pca_reduce(ds: Dataset, d: int) -> tuple[Dataset, np.ndarray]:
    basis = pca_basis(ds.features, d)
    Z = (ds.features - ds.features.mean(axis=0)) @ basis
    return Dataset(Z, ds.labels, ds.name, tuple(f"pc{j + 1}" for j in range(d))), basis
