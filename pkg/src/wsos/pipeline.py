"""End-to-end training (bootstrap -> CS-NCA -> GSS -> multi-head network -> head weights),
evaluation, baseline methods and the cross-validated experiment driver."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import csnca
from .csnca import CsNcaConfig
from .dataset import Dataset, DatasetError, ScalerParams, apply_scaler, fit_scaler, fold_split, pca_basis, \
    scale_features, stratified_kfold
from .ensemble import EnsembleModel, NetworkArch, TrainConfig, bootstrap_subsets, build_network, \
    ensemble_predict, score_heads, train_head
from .metrics import ConfusionMatrix, MetricSet, compute_metrics, confusion, rank_table
from .numerics import RandomStream
from .oversample import GssConfig, SoftLabeledDataset, gss_oversample, smote_balance

log = logging.getLogger(__name__)

PROPOSED = "proposed"
# index in this tuple keys each method's random stream; append only
METHODS = (PROPOSED, "smote_nn", "rus_nn", "pca_smote_nn", "csnca_smote_nn")
BASELINES = METHODS[1:]
REPORT_SCHEMA_VERSION = 1


class PipelineError(RuntimeError):
    def __init__(self, step: int, stage: str, cause: Exception):
        super().__init__(f"step {step} ({stage}) failed: {cause}")
        self.step = step
        self.stage = stage


@dataclass
class BefConfig:
    K: int = 5
    ir_prime: float = 2.0


@dataclass
class ArchConfig:
    trunk_widths: list[int] = field(default_factory=list)  # empty: max(16, 2 * input_dim)
    head_width: int = 8


@dataclass
class PipelineConfig:
    bef: BefConfig = field(default_factory=BefConfig)
    csnca: CsNcaConfig = field(default_factory=CsNcaConfig)
    gss: GssConfig = field(default_factory=GssConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    arch: ArchConfig = field(default_factory=ArchConfig)
    threshold: float = 0.5
    folds: int = 5
    seeds: list[int] = field(default_factory=lambda: [0])

    def validate(self) -> None:
        if self.bef.K < 1:
            raise ValueError("bef.K must be >= 1")
        if self.bef.ir_prime < 1:
            raise ValueError("bef.ir_prime must be >= 1")
        self.csnca.validate()
        self.gss.validate()
        self.train.validate()
        if self.arch.head_width < 1 or any(w < 1 for w in self.arch.trunk_widths):
            raise ValueError("arch widths must be >= 1")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        return cls(
            bef=BefConfig(**d.pop("bef", {})),
            csnca=CsNcaConfig(**d.pop("csnca", {})),
            gss=GssConfig(**d.pop("gss", {})),
            train=TrainConfig(**d.pop("train", {})),
            arch=ArchConfig(**d.pop("arch", {})),
            **d,
        )


@dataclass
class TrainedPipeline:
    scaler: ScalerParams
    P: np.ndarray | None  # None: no dimension reduction
    model: EnsembleModel
    threshold: float = 0.5
    info: dict = field(default_factory=dict)

    def transform(self, X) -> np.ndarray:
        Z = scale_features(self.scaler, X)
        return Z if self.P is None else csnca.project(self.P, Z)

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        return ensemble_predict(self.model, self.transform(X), self.threshold)

    def to_dict(self) -> dict:
        return {
            "format": "wsos-pipeline",
            "version": 1,
            "scaler": self.scaler.to_dict(),
            "P": None if self.P is None else self.P.tolist(),
            "threshold": self.threshold,
            "info": self.info,
            "model": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedPipeline":
        if d.get("format") != "wsos-pipeline":
            raise ValueError("not a pipeline file")
        P = None if d["P"] is None else np.asarray(d["P"], float)
        return cls(ScalerParams.from_dict(d["scaler"]), P, EnsembleModel.from_dict(d["model"]),
                   float(d["threshold"]), d.get("info", {}))


def _arch(cfg: PipelineConfig, input_dim: int, K: int) -> NetworkArch:
    return NetworkArch(input_dim, list(cfg.arch.trunk_widths), K, cfg.arch.head_width)


def _step(n: int, stage: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the failing step attached
        raise PipelineError(n, stage, exc) from exc


def fit(train: Dataset, cfg: PipelineConfig, stream: RandomStream) -> TrainedPipeline:
    """Train the proposed method on ``train``; every random choice comes from ``stream``."""
    cfg.validate()
    train.require_both_classes("training set")
    if train.n_pos < 2:
        raise DatasetError("training set needs at least 2 positives")
    scaler = fit_scaler(train)
    S = apply_scaler(scaler, train)
    K = cfg.bef.K
    subsets = _step(1, "bootstrap", bootstrap_subsets, S, K, cfg.bef.ir_prime, stream.child(1))
    pick = stream.child(2).integers(0, K)
    nca_cfg = CsNcaConfig(**{**asdict(cfg.csnca), "d": min(cfg.csnca.d, S.dim)})
    res = _step(3, "cs-nca", csnca.fit, subsets[pick].dataset, nca_cfg, stream.child(3))
    model = build_network(_arch(cfg, res.P.shape[0], K), stream.child(4))
    statuses = []
    for j, sub in enumerate(subsets):
        reduced = sub.dataset.with_features(csnca.project(res.P, sub.dataset.features))
        soft = _step(5, "gss", gss_oversample, reduced, cfg.gss, stream.child(5, j))
        if soft.status == "no_retention":
            log.warning("subset %d: GSS kept nothing; falling back to SMOTE labels", j)
            soft = _step(5, "gss", smote_balance, reduced, cfg.gss.k, stream.child(5, j, 1))
            statuses.append("smote_fallback")
        else:
            statuses.append(soft.status)
        model, _ = _step(6, "train head", train_head, model, j, soft, cfg.train, stream.child(6, j))
    Z = csnca.project(res.P, S.features)
    s, w = _step(7, "score heads", score_heads, model, Z, S.labels, cfg.threshold)
    model.head_weights = w
    info = {"method": PROPOSED, "csnca_subset": int(pick), "csnca_delta": res.delta, "csnca_c": res.c,
            "csnca_q_init": res.q_init, "csnca_q_final": res.q_final,
            "head_scores": [float(v) for v in s], "gss_status": statuses}
    return TrainedPipeline(scaler, res.P, model, cfg.threshold, info)


def evaluate(pipeline: TrainedPipeline, test: Dataset) -> tuple[ConfusionMatrix, MetricSet]:
    test.require_both_classes("test set")
    if test.dim != pipeline.scaler.mean.shape[0]:
        raise DatasetError(f"test set has {test.dim} features, pipeline expects {pipeline.scaler.mean.shape[0]}")
    _, labels = pipeline.predict(test.features)
    cm = confusion(test.labels, labels)
    return cm, compute_metrics(cm)


def _single_head(X, soft: SoftLabeledDataset, cfg: PipelineConfig, stream: RandomStream) -> EnsembleModel:
    model = build_network(_arch(cfg, X.shape[1], 1), stream.child(4))
    model, _ = train_head(model, 0, soft, cfg.train, stream.child(6))
    model.head_weights = np.ones(1)
    return model


def fit_baseline(name: str, train: Dataset, cfg: PipelineConfig, stream: RandomStream) -> TrainedPipeline:
    """Single-head network baselines sharing the proposed method's architecture and training setup.

    ``smote_nn``: SMOTE to balance. ``rus_nn``: random undersampling of the
    negatives to balance. ``pca_smote_nn`` / ``csnca_smote_nn``: reduce to
    ``csnca.d`` dimensions with PCA / CS-NCA (fit on the whole training set),
    then SMOTE.
    """
    if name not in BASELINES:
        raise ValueError(f"unknown baseline {name!r}; choose from {', '.join(BASELINES)}")
    cfg.validate()
    train.require_both_classes("training set")
    scaler = fit_scaler(train)
    S = apply_scaler(scaler, train)
    P = None
    info: dict = {"method": name}
    if name == "pca_smote_nn":
        P = pca_basis(S.features, min(cfg.csnca.d, S.dim)).T
    elif name == "csnca_smote_nn":
        res = csnca.fit(S, CsNcaConfig(**{**asdict(cfg.csnca), "d": min(cfg.csnca.d, S.dim)}), stream.child(3))
        P = res.P
        info.update(csnca_delta=res.delta, csnca_c=res.c)
    X = S.features if P is None else csnca.project(P, S.features)
    if name == "rus_nn":
        neg = np.flatnonzero(S.labels == 0)
        pos = np.flatnonzero(S.labels == 1)
        keep = neg[stream.child(1).choice(neg.size, min(pos.size, neg.size), replace=False)]
        idx = np.sort(np.r_[keep, pos])
        soft = SoftLabeledDataset.from_hard(X[idx], S.labels[idx])
    else:
        soft = smote_balance(S.with_features(X), cfg.gss.k, stream.child(5))
    info["train_rows"] = len(soft)
    model = _single_head(X, soft, cfg, stream)
    return TrainedPipeline(scaler, P, model, cfg.threshold, info)


def run_baseline(name: str, train: Dataset, test: Dataset, cfg: PipelineConfig,
                 stream: RandomStream) -> tuple[ConfusionMatrix, MetricSet]:
    return evaluate(fit_baseline(name, train, cfg, stream), test)


def fit_method(method: str, train: Dataset, cfg: PipelineConfig, stream: RandomStream) -> TrainedPipeline:
    if method == PROPOSED:
        return fit(train, cfg, stream)
    return fit_baseline(method, train, cfg, stream)


@dataclass
class Cell:
    dataset: str
    method: str
    fold: int
    seed: int
    confusion: ConfusionMatrix
    metrics: MetricSet

    def to_dict(self) -> dict:
        return {"dataset": self.dataset, "method": self.method, "fold": self.fold, "seed": self.seed,
                **self.confusion.to_dict(), **self.metrics.to_dict()}


@dataclass
class ExperimentReport:
    datasets: list[str]
    methods: list[str]
    folds: int
    seeds: list[int]
    cells: list[Cell]
    dataset_info: dict = field(default_factory=dict)

    METRICS = ("f_measure", "g_mean", "f_plus_g")

    def values(self, dataset: str, method: str, metric: str, seed: int | None = None) -> np.ndarray:
        return np.array([getattr(c.metrics, metric) for c in self.cells
                         if c.dataset == dataset and c.method == method and (seed is None or c.seed == seed)])

    def aggregates(self) -> list[dict]:
        out = []
        for ds in self.datasets:
            for m in self.methods:
                row = {"dataset": ds, "method": m}
                for metric in self.METRICS:
                    v = self.values(ds, m, metric)
                    row[f"{metric}_mean"] = float(v.mean())
                    row[f"{metric}_sd"] = float(v.std(ddof=1)) if v.size > 1 else 0.0
                out.append(row)
        return out

    def ranks(self):
        tables = {metric: np.array([[self.values(ds, m, metric).mean() for ds in self.datasets]
                                    for m in self.methods]) for metric in self.METRICS}
        return rank_table(self.methods, tables)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "datasets": list(self.datasets),
            "methods": list(self.methods),
            "folds": self.folds,
            "seeds": list(self.seeds),
            "dataset_info": self.dataset_info,
            "cells": [c.to_dict() for c in self.cells],
            "aggregates": self.aggregates(),
            "ranks": self.ranks().to_dict(),
        }


def _run_cell(args) -> Cell:
    di, ds, method, f, seed, folds, cfg = args
    train, test = fold_split(ds, folds, f)
    stream = RandomStream(seed, (di, f + 1, METHODS.index(method)))
    try:
        cm, ms = evaluate(fit_method(method, train, cfg, stream), test)
    except Exception as exc:
        raise RuntimeError(f"cell (dataset={ds.name}, method={method}, fold={f}, seed={seed}) failed: {exc}") from exc
    return Cell(ds.name, method, f, seed, cm, ms)


def run_experiment(datasets: list[Dataset], methods: list[str], cfg: PipelineConfig,
                   n_jobs: int = 1, progress=None) -> ExperimentReport:
    """Stratified k-fold evaluation of every (dataset, method, fold, seed) cell.

    Each cell's randomness is derived from (seed, dataset index, fold,
    method), so results do not depend on execution order or ``n_jobs``.
    """
    cfg.validate()
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ValueError("dataset names must be unique")
    jobs = []
    for seed in cfg.seeds:
        for di, ds in enumerate(datasets):
            folds = stratified_kfold(ds, cfg.folds, RandomStream(seed, (di, 0)))
            for f in range(cfg.folds):
                for m in methods:
                    jobs.append((di, ds, m, f, seed, folds, cfg))
    if n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as ex:
            cells = list(ex.map(_run_cell, jobs))
    else:
        cells = []
        for job in jobs:
            cells.append(_run_cell(job))
            if progress:
                progress(cells[-1])
    info = {d.name: {"n": d.n, "dim": d.dim, "n_pos": d.n_pos, "n_neg": d.n_neg, "ir": d.imbalance_ratio}
            for d in datasets}
    return ExperimentReport(names, list(methods), cfg.folds, list(cfg.seeds), cells, info)
