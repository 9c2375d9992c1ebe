"""Cost-sensitive neighbourhood components analysis.

Learns a linear map ``P`` (d x D) such that stochastic nearest-neighbour
voting in the projected space ``X P^T`` classifies the training set well,
with every positive sample's leave-one-out accuracy weighted by ``c``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dataset import Dataset, DatasetError, pca_basis
from .numerics import RandomStream

log = logging.getLogger(__name__)

MAX_HALVINGS = 20


@dataclass
class CsNcaConfig:
    d: int = 10
    c: float | None = None  # None: imbalance ratio of the fitting set
    delta: float | None = None  # None: median projected distance at init
    learning_rate: float = 0.05
    max_iters: int = 200
    init: Literal["pca", "random"] = "pca"
    seed: int = 0

    def validate(self, D: int | None = None) -> None:
        if self.d < 1:
            raise ValueError("csnca.d must be >= 1")
        if D is not None and self.d > D:
            raise ValueError(f"csnca.d={self.d} exceeds input dimension {D}")
        if self.c is not None and self.c < 1:
            raise ValueError("csnca.c must be >= 1")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("csnca.delta must be > 0")
        if not self.learning_rate > 0:
            raise ValueError("csnca.learning_rate must be > 0")
        if self.max_iters < 0:
            raise ValueError("csnca.max_iters must be >= 0")
        if self.init not in ("pca", "random"):
            raise ValueError(f"csnca.init must be 'pca' or 'random', got {self.init!r}")


@dataclass
class NeighborProbs:
    p: np.ndarray
    r: np.ndarray


@dataclass
class CsNcaResult:
    P: np.ndarray
    delta: float
    c: float
    q_init: float
    q_final: float
    trace: list[float] = field(default_factory=list)


def project(P, X) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != P.shape[1]:
        raise ValueError(f"dimension mismatch: X has {X.shape[-1]} columns, P expects {P.shape[1]}")
    return X @ P.T


def _sq_dists(Z: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", Z, Z)
    D2 = sq[:, None] + sq[None, :] - 2.0 * Z @ Z.T
    np.maximum(D2, 0.0, out=D2)
    np.fill_diagonal(D2, 0.0)
    return D2


def median_distance(P, X) -> float:
    D2 = _sq_dists(project(P, X))
    iu = np.triu_indices(D2.shape[0], 1)
    return float(np.sqrt(np.median(D2[iu])))


def _probs(P, X, delta):
    """Return (p, neighbourhood mask, squared distances, per-row shift)."""
    D2 = _sq_dists(project(P, X))
    if not np.all(np.isfinite(D2)):
        raise FloatingPointError("non-finite projected distances")
    n = D2.shape[0]
    mask = D2 <= delta * delta
    mask[np.diag_indices(n)] = False
    # exp(-d) shifted by each row's smallest in-neighbourhood distance; p is shift-invariant
    shifted = np.where(mask, D2, np.inf)
    row_min = shifted.min(axis=1, initial=np.inf)
    row_min[~np.isfinite(row_min)] = 0.0
    r_shift = np.where(mask, np.exp(-(D2 - row_min[:, None])), 0.0)
    z = r_shift.sum(axis=1)
    p = np.divide(r_shift, z[:, None], out=np.zeros_like(r_shift), where=z[:, None] > 0)
    return p, mask, D2, row_min


def neighbor_probs(P, X, delta: float) -> NeighborProbs:
    if not delta > 0:
        raise ValueError("delta must be > 0")
    p, mask, D2, _ = _probs(P, X, delta)
    r = np.where(mask, np.exp(-D2), 0.0)
    return NeighborProbs(p=p, r=r)


def _weights(y: np.ndarray, c: float) -> np.ndarray:
    return np.where(y == 1, float(c), 1.0)


def objective(P, ds: Dataset, c: float, delta: float) -> float:
    p, *_ = _probs(P, ds.features, delta)
    y = ds.labels
    same = y[:, None] == y[None, :]
    return float(_weights(y, c) @ (p * same).sum(axis=1))


def h_matrix(P, ds: Dataset, c: float, delta: float) -> np.ndarray:
    """``h_ij = p_i p_ij - q_ij`` with ``p_i`` the weighted LOO accuracy of sample i."""
    p, *_ = _probs(P, ds.features, delta)
    y = ds.labels
    same = y[:, None] == y[None, :]
    w = _weights(y, c)
    q = w[:, None] * p * same
    p_i = q.sum(axis=1)
    return p_i[:, None] * p - q


def objective_and_gradient(P, ds: Dataset, c: float, delta: float) -> tuple[float, np.ndarray]:
    P = np.asarray(P, dtype=float)
    X = ds.features
    p, *_ = _probs(P, X, delta)
    y = ds.labels
    same = y[:, None] == y[None, :]
    w = _weights(y, c)
    q = w[:, None] * p * same
    p_i = q.sum(axis=1)
    H = p_i[:, None] * p - q
    # row sums of H vanish, so only the column-sum diagonal survives
    L = np.diag(H.sum(axis=0)) - H - H.T
    grad = 2.0 * P @ (X.T @ L @ X)
    return float(p_i.sum()), grad


def gradient(P, ds: Dataset, c: float, delta: float) -> np.ndarray:
    return objective_and_gradient(P, ds, c, delta)[1]


def init_projection(X, d: int, how: str, stream: RandomStream | None = None) -> np.ndarray:
    D = X.shape[1]
    if how == "pca" and X.shape[0] >= 2:
        P = pca_basis(X, d).T
        if np.linalg.matrix_rank(P) == d:
            return P
    if stream is None:
        stream = RandomStream(0)
    A = stream.normal(0.0, 1.0, (D, d))
    Qm, _ = np.linalg.qr(A)
    return Qm[:, :d].T.copy()


def fit(ds: Dataset, config: CsNcaConfig, stream: RandomStream | None = None) -> CsNcaResult:
    """Gradient ascent on Q with step halving; returns the best P seen."""
    config.validate(ds.dim)
    ds.require_both_classes("CS-NCA training set")
    if stream is None:
        stream = RandomStream(config.seed)
    c = float(config.c) if config.c is not None else max(1.0, ds.imbalance_ratio)
    P = init_projection(ds.features, config.d, config.init, stream)
    delta = config.delta if config.delta is not None else median_distance(P, ds.features)
    if not delta > 0:
        raise DatasetError("degenerate data: median projected distance is 0; pass an explicit delta")
    q, g = objective_and_gradient(P, ds, c, delta)
    q_init = q
    trace = [q]
    for it in range(config.max_iters):
        step = config.learning_rate
        accepted = False
        q_new = np.nan
        for _ in range(MAX_HALVINGS + 1):
            cand = P + step * g
            if np.all(np.isfinite(cand)):
                try:
                    q_new, g_new = objective_and_gradient(cand, ds, c, delta)
                except FloatingPointError:
                    q_new = np.nan
                if np.isfinite(q_new) and q_new >= q:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            if not np.isfinite(q_new):
                raise FloatingPointError(f"CS-NCA diverged at iteration {it}: non-finite Q after {MAX_HALVINGS} halvings")
            log.debug("csnca: no ascent step at iteration %d; stopping", it)
            break
        P, q, g = cand, q_new, g_new
        trace.append(q)
    return CsNcaResult(P=P, delta=float(delta), c=c, q_init=q_init, q_final=q, trace=trace)


def loo_score(P, ds: Dataset, c: float) -> float:
    """Cost-weighted leave-one-out 1-NN accuracy in the projected space."""
    D2 = _sq_dists(project(P, ds.features))
    np.fill_diagonal(D2, np.inf)
    nn = D2.argmin(axis=1)
    hit = ds.labels[nn] == ds.labels
    w = _weights(ds.labels, c)
    return float((w * hit).sum() / w.sum())
