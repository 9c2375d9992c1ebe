"""SMOTE synthesis and graph semi-supervised relabelling of the synthetic points.

Synthetic samples are treated as unlabelled nodes of a dense Gaussian
similarity graph over real + synthetic points. Their positive-class
probability is the harmonic extension of the real labels; only samples
with probability above ``p_delta`` are kept, with soft label ``[1-f, f]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dataset import Dataset, DatasetError
from .numerics import RandomStream, SingularMatrixError, solve_dd

log = logging.getLogger(__name__)

REAL, SYNTHETIC = 0, 1


@dataclass
class SyntheticBatch:
    features: np.ndarray
    seed_index: np.ndarray
    neighbor_index: np.ndarray
    t: np.ndarray

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class SimilarityGraph:
    W: np.ndarray
    sigma: float
    degree: np.ndarray


@dataclass
class GssConfig:
    k: int = 5
    sigma: Union[float, str] = "auto"
    p_delta: float = 0.5
    max_rounds: int = 5

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError("gss.k must be >= 1")
        if not 0 < self.p_delta < 1:
            raise ValueError("gss.p_delta must lie in (0, 1)")
        if self.max_rounds < 1:
            raise ValueError("gss.max_rounds must be >= 1")
        if isinstance(self.sigma, str):
            if self.sigma not in ("auto", "median"):
                raise ValueError(f"gss.sigma must be a positive number, 'auto' or 'median', got {self.sigma!r}")
        elif not self.sigma > 0:
            raise ValueError("gss.sigma must be > 0")


@dataclass
class SoftLabeledDataset:
    features: np.ndarray
    soft_labels: np.ndarray  # columns: p(negative), p(positive)
    origin: np.ndarray  # REAL or SYNTHETIC per row
    status: str = "ok"

    def __post_init__(self):
        s = self.soft_labels
        if s.ndim != 2 or s.shape[1] != 2 or s.shape[0] != self.features.shape[0]:
            raise ValueError("soft_labels must be (rows, 2) and match features")
        if np.any(s < 0) or np.any(s > 1) or np.any(np.abs(s.sum(axis=1) - 1) > 1e-12):
            raise ValueError("soft labels must be probability vectors")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_synthetic(self) -> int:
        return int(np.sum(self.origin == SYNTHETIC))

    @classmethod
    def from_hard(cls, X, y, origin=None) -> "SoftLabeledDataset":
        y = np.asarray(y, dtype=float)
        if origin is None:
            origin = np.full(y.shape[0], REAL)
        return cls(np.asarray(X, float), np.column_stack([1.0 - y, y]), np.asarray(origin))

    def to_rows(self) -> tuple[list[str], list[list[str]]]:
        d = self.features.shape[1]
        header = [f"f{j + 1}" for j in range(d)] + ["p_neg", "p_pos", "origin"]
        rows = [[repr(float(v)) for v in x] + [repr(float(s[0])), repr(float(s[1])),
                                               "synthetic" if o == SYNTHETIC else "real"]
                for x, s, o in zip(self.features, self.soft_labels, self.origin)]
        return header, rows


def _pairwise_sq(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    D2 = np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * A @ B.T
    return np.maximum(D2, 0.0)


def nearest_neighbors(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows of ``X`` (Euclidean, ties by index)."""
    D2 = _pairwise_sq(X, X)
    np.fill_diagonal(D2, np.inf)
    return np.argsort(D2, axis=1, kind="stable")[:, :k]


def smote_generate(X_pos, m: int, k: int, stream: RandomStream) -> SyntheticBatch:
    X_pos = np.asarray(X_pos, dtype=float)
    n_pos = X_pos.shape[0]
    if n_pos < 2:
        raise DatasetError(f"SMOTE needs at least 2 positive samples, got {n_pos}")
    if m < 0:
        raise ValueError("sample count must be non-negative")
    k_eff = min(k, n_pos - 1)
    nn = nearest_neighbors(X_pos, k_eff)
    seeds = stream.integers(0, n_pos, m) if m else np.zeros(0, dtype=np.int64)
    picks = stream.integers(0, k_eff, m) if m else np.zeros(0, dtype=np.int64)
    t = stream.uniform(0.0, 1.0, m) if m else np.zeros(0)
    neigh = nn[seeds, picks]
    X_new = X_pos[seeds] + t[:, None] * (X_pos[neigh] - X_pos[seeds])
    return SyntheticBatch(X_new.reshape(m, X_pos.shape[1]), seeds, neigh, t)


def median_pairwise_distance(X) -> float:
    X = np.asarray(X, dtype=float)
    iu = np.triu_indices(X.shape[0], 1)
    return float(np.sqrt(np.median(_pairwise_sq(X, X)[iu])))


def knn_bandwidth(X, k: int = 5) -> float:
    """Median over points of the distance to their ``k``-th nearest other point."""
    X = np.asarray(X, dtype=float)
    k = min(k, X.shape[0] - 1)
    D2 = _pairwise_sq(X, X)
    np.fill_diagonal(D2, np.inf)
    return float(np.sqrt(np.median(np.partition(D2, k - 1, axis=1)[:, k - 1])))


def resolve_bandwidth(X_all, sigma: Union[float, str]) -> float:
    if sigma == "auto":
        return knn_bandwidth(X_all)
    if sigma == "median":
        return median_pairwise_distance(X_all)
    return float(sigma)


def graph_weights(X_all, sigma: Union[float, str] = "auto") -> SimilarityGraph:
    """Dense Gaussian similarity graph with zero diagonal.

    ``sigma`` may be a positive number, ``"auto"`` (median distance to the
    5th nearest neighbour) or ``"median"`` (median pairwise distance).
    """
    X_all = np.asarray(X_all, dtype=float)
    if X_all.shape[0] < 2:
        raise ValueError("graph needs at least 2 nodes")
    sigma = resolve_bandwidth(X_all, sigma)
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    W = np.exp(-_pairwise_sq(X_all, X_all) / sigma**2)
    np.fill_diagonal(W, 0.0)
    return SimilarityGraph(W=W, sigma=sigma, degree=W.sum(axis=1))


def propagate(graph: SimilarityGraph, f_n, n: int) -> np.ndarray:
    """Harmonic values of nodes ``n:`` given clamped values ``f_n`` on nodes ``:n``."""
    f_n = np.asarray(f_n, dtype=float)
    if f_n.shape != (n,):
        raise ValueError(f"expected {n} labelled values, got shape {f_n.shape}")
    W = graph.W
    A = np.diag(graph.degree[n:]) - W[n:, n:]
    b = W[n:, :n] @ f_n
    # the exact solution obeys the maximum principle; clamp away round-off (a few ulp) only
    return np.clip(solve_dd(A, b), f_n.min(), f_n.max())


def energy(W: np.ndarray, f: np.ndarray) -> float:
    diff = f[:, None] - f[None, :]
    return 0.5 * float(np.sum(W * diff * diff))


def gss_oversample(ds: Dataset, config: GssConfig, stream: RandomStream) -> SoftLabeledDataset:
    """Oversample the positives of ``ds`` towards balance with graph-relabelled SMOTE points.

    Each round draws ``|S0| - |S1|`` fresh candidates, propagates the real
    labels to them and keeps those with ``f > p_delta``. Rounds stop once
    the kept samples plus real positives reach ``|S0|`` or after
    ``max_rounds``; any surplus is trimmed in generation order.
    """
    config.validate()
    ds.require_both_classes("GSS input")
    X, y = ds.features, ds.labels
    real = SoftLabeledDataset.from_hard(X, y)
    need = ds.n_neg - ds.n_pos
    if need <= 0:
        return real
    X_pos = ds.positives()
    kept_x, kept_f = [], []
    n_kept = 0
    for _ in range(config.max_rounds):
        batch = smote_generate(X_pos, need, config.k, stream)
        graph = graph_weights(np.vstack([X, batch.features]), config.sigma)
        try:
            f_m = propagate(graph, y.astype(float), ds.n)
        except SingularMatrixError as exc:
            log.warning("GSS round skipped: %s", exc)
            continue
        keep = f_m > config.p_delta
        kept_x.append(batch.features[keep])
        kept_f.append(f_m[keep])
        n_kept += int(keep.sum())
        if n_kept >= need:
            break
    fs = np.concatenate(kept_f) if kept_f else np.zeros(0)
    if fs.size == 0:
        log.warning("GSS retained no synthetic samples after %d rounds", config.max_rounds)
        real.status = "no_retention"
        return real
    Xs = np.vstack(kept_x)[:need]
    fs = fs[:need]
    status = "ok" if n_kept >= need else "partial"
    return SoftLabeledDataset(
        features=np.vstack([X, Xs]),
        soft_labels=np.vstack([real.soft_labels, np.column_stack([1.0 - fs, fs])]),
        origin=np.r_[real.origin, np.full(Xs.shape[0], SYNTHETIC)],
        status=status,
    )


def smote_balance(ds: Dataset, k: int, stream: RandomStream) -> SoftLabeledDataset:
    """Plain SMOTE to full balance; every synthetic sample labelled positive."""
    need = ds.n_neg - ds.n_pos
    if need <= 0:
        return SoftLabeledDataset.from_hard(ds.features, ds.labels)
    batch = smote_generate(ds.positives(), need, k, stream)
    return SoftLabeledDataset.from_hard(
        np.vstack([ds.features, batch.features]),
        np.r_[ds.labels, np.ones(need)],
        np.r_[np.full(ds.n, REAL), np.full(need, SYNTHETIC)],
    )
