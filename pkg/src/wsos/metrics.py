"""Confusion counts, F-measure / G-mean / F+G and mean-rank tables."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricSet:
    f_measure: float
    g_mean: float
    f_plus_g: float

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    for name, v in (("y_true", t), ("y_pred", p)):
        if not np.all((v == 0) | (v == 1)):
            raise ValueError(f"{name} has non-binary entries")
    t = t.astype(bool)
    p = p.astype(bool)
    return ConfusionMatrix(tp=int(np.sum(t & p)), fn=int(np.sum(t & ~p)),
                           fp=int(np.sum(~t & p)), tn=int(np.sum(~t & ~p)))


def compute_metrics(cm: ConfusionMatrix) -> MetricSet:
    if cm.tp + cm.fn == 0 or cm.fp + cm.tn == 0:
        raise ValueError(f"evaluation set lacks a class: {cm}")
    denom = 2 * cm.tp + cm.fn + cm.fp
    f = 2 * cm.tp / denom if denom else 0.0
    g = math.sqrt(cm.tp / (cm.tp + cm.fn) * cm.tn / (cm.tn + cm.fp))
    return MetricSet(f, g, f + g)


def mean_rank(scores) -> np.ndarray:
    """Mean rank per method from a (methods x datasets) score table.

    Higher score ranks first; ties share the average of the ranks they span.
    """
    S = np.asarray(scores, dtype=float)
    if S.ndim != 2 or S.size == 0:
        raise ValueError("score table must be a non-empty 2-D array")
    if not np.all(np.isfinite(S)):
        raise ValueError("score table has missing or non-finite cells")
    ranks = np.column_stack([rankdata(-S[:, j], method="average") for j in range(S.shape[1])])
    return ranks.mean(axis=1)


@dataclass
class RankTable:
    methods: list[str]
    metrics: dict[str, list[float]]

    def to_dict(self) -> dict:
        return {"methods": list(self.methods), "mean_rank": {k: list(v) for k, v in self.metrics.items()}}


def rank_table(methods: list[str], tables: dict[str, np.ndarray]) -> RankTable:
    """``tables`` maps metric name to a (methods x datasets) score array."""
    return RankTable(list(methods), {k: [float(r) for r in mean_rank(v)] for k, v in tables.items()})
