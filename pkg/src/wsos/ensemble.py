"""Bootstrapped sub-training sets and a shared-trunk network with one head per subset.

Each head is a small ReLU layer followed by a 2-way softmax. During training
only one head (plus the trunk) receives gradients; at prediction time the
heads' positive-class outputs are averaged with weights proportional to
each head's F+G score on the full training set.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import Dataset, DatasetError
from .metrics import compute_metrics, confusion
from .numerics import RandomStream
from .oversample import SoftLabeledDataset

FORMAT = "wsos-ensemble"
FORMAT_VERSION = 1


@dataclass
class SubTrainingSet:
    dataset: Dataset
    subset_id: int


def bootstrap_subsets(ds: Dataset, K: int, ir_prime: float, stream: RandomStream) -> list[SubTrainingSet]:
    """K sets of all positives plus ``round(ir_prime * |S1|)`` negatives drawn with replacement."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if ir_prime < 1:
        raise ValueError("ir_prime must be >= 1")
    if ds.n_pos < 1:
        raise DatasetError("bootstrap needs at least one positive sample")
    neg_idx = np.flatnonzero(ds.labels == 0)
    pos_idx = np.flatnonzero(ds.labels == 1)
    if neg_idx.size == 0:
        raise DatasetError("bootstrap needs at least one negative sample")
    n_draw = int(round(ir_prime * pos_idx.size))
    out = []
    for k in range(K):
        draw = neg_idx[stream.child(k).integers(0, neg_idx.size, n_draw)]
        out.append(SubTrainingSet(ds.subset(np.r_[draw, pos_idx], f"{ds.name}/boot{k}"), k))
    return out


@dataclass
class NetworkArch:
    input_dim: int
    trunk_widths: list[int] = field(default_factory=list)  # empty: max(16, 2 * input_dim)
    K: int = 5
    head_width: int = 8

    def __post_init__(self):
        if not self.trunk_widths:
            self.trunk_widths = [max(16, 2 * self.input_dim)]

    def validate(self) -> None:
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.input_dim < 1 or self.head_width < 1 or any(w < 1 for w in self.trunk_widths):
            raise ValueError("all layer widths must be >= 1")


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int = 32
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 0:
            raise ValueError("train.epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("train.learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("train.batch_size must be >= 1")


class TrainingError(FloatingPointError):
    pass


def _layer(stream: RandomStream, fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
    bound = 1.0 / np.sqrt(fan_in)
    return stream.uniform(-bound, bound, (fan_in, fan_out)), np.zeros(fan_out)


@dataclass
class EnsembleModel:
    arch: NetworkArch
    trunk: list[tuple[np.ndarray, np.ndarray]]
    heads: list[list[tuple[np.ndarray, np.ndarray]]]
    head_weights: np.ndarray

    @property
    def K(self) -> int:
        return len(self.heads)

    def copy(self) -> "EnsembleModel":
        return copy.deepcopy(self)

    def to_dict(self) -> dict:
        blocks = []
        for i, (W, b) in enumerate(self.trunk):
            blocks += [_block(f"trunk.{i}.W", W), _block(f"trunk.{i}.b", b)]
        for j, head in enumerate(self.heads):
            for i, (W, b) in enumerate(head):
                blocks += [_block(f"head.{j}.{i}.W", W), _block(f"head.{j}.{i}.b", b)]
        return {"format": FORMAT, "version": FORMAT_VERSION, "arch": asdict(self.arch),
                "head_weights": [float(w) for w in self.head_weights], "blocks": blocks}

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        if d.get("format") != FORMAT or d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model file: format={d.get('format')!r} version={d.get('version')!r}")
        arch = NetworkArch(**d["arch"])
        blocks = {b["name"]: np.asarray(b["data"], float).reshape(b["shape"]) for b in d["blocks"]}
        trunk = [(blocks[f"trunk.{i}.W"], blocks[f"trunk.{i}.b"]) for i in range(len(arch.trunk_widths))]
        heads = [[(blocks[f"head.{j}.{i}.W"], blocks[f"head.{j}.{i}.b"]) for i in range(2)] for j in range(arch.K)]
        return cls(arch, trunk, heads, np.asarray(d["head_weights"], float))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "EnsembleModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _block(name: str, a: np.ndarray) -> dict:
    return {"name": name, "shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def build_network(arch: NetworkArch, stream: RandomStream) -> EnsembleModel:
    arch.validate()
    trunk = []
    width = arch.input_dim
    for w in arch.trunk_widths:
        trunk.append(_layer(stream, width, w))
        width = w
    heads = [[_layer(stream, width, arch.head_width), _layer(stream, arch.head_width, 2)] for _ in range(arch.K)]
    return EnsembleModel(arch, trunk, heads, np.full(arch.K, 1.0 / arch.K))


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _trunk_forward(model: EnsembleModel, X: np.ndarray):
    acts = [X]
    h = X
    for W, b in model.trunk:
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    return acts


def _head_forward(head, h: np.ndarray):
    (W1, b1), (W2, b2) = head
    a = np.maximum(h @ W1 + b1, 0.0)
    return a, _softmax(a @ W2 + b2)


def head_outputs(model: EnsembleModel, X) -> np.ndarray:
    """Positive-class softmax output of every head, shape (n, K)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.arch.input_dim:
        raise ValueError(f"dimension mismatch: got {X.shape}, model expects {model.arch.input_dim} columns")
    h = _trunk_forward(model, X)[-1]
    return np.column_stack([_head_forward(head, h)[1][:, 1] for head in model.heads])


def head_probs(model: EnsembleModel, j: int, X) -> np.ndarray:
    h = _trunk_forward(model, np.asarray(X, float))[-1]
    return _head_forward(model.heads[j], h)[1]


def loss_and_grads(model: EnsembleModel, j: int, X: np.ndarray, Y: np.ndarray):
    """Mean soft-label cross-entropy of head ``j`` and its gradients.

    Returns ``(loss, trunk_grads, head_grads)`` with the same nesting as the
    model's parameter lists.
    """
    acts = _trunk_forward(model, X)
    (W1, b1), (W2, b2) = model.heads[j]
    a = np.maximum(acts[-1] @ W1 + b1, 0.0)
    probs = _softmax(a @ W2 + b2)
    n = X.shape[0]
    loss = -float(np.sum(Y * np.log(np.clip(probs, 1e-300, None)))) / n
    # softmax + cross-entropy with targets summing to 1
    g = (probs - Y) / n
    gW2, gb2 = a.T @ g, g.sum(axis=0)
    g = (g @ W2.T) * (a > 0)
    gW1, gb1 = acts[-1].T @ g, g.sum(axis=0)
    g = g @ W1.T
    trunk_grads = [None] * len(model.trunk)
    for i in range(len(model.trunk) - 1, -1, -1):
        g = g * (acts[i + 1] > 0)
        W, _ = model.trunk[i]
        trunk_grads[i] = (acts[i].T @ g, g.sum(axis=0))
        g = g @ W.T
    return loss, trunk_grads, [(gW1, gb1), (gW2, gb2)]


def train_head(model: EnsembleModel, j: int, data: SoftLabeledDataset, cfg: TrainConfig,
               stream: RandomStream) -> tuple[EnsembleModel, list[float]]:
    """Minibatch gradient descent on the trunk and head ``j`` only.

    Returns a new model and the per-epoch mean minibatch loss.
    """
    cfg.validate()
    if not 0 <= j < model.K:
        raise IndexError(f"head index {j} out of range for K={model.K}")
    if len(data) == 0:
        raise DatasetError("training data is empty")
    model = model.copy()
    X, Y = data.features, data.soft_labels
    n = X.shape[0]
    trace = []
    lr = cfg.learning_rate
    for epoch in range(cfg.epochs):
        order = stream.permutation(n)
        losses = []
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            loss, tg, hg = loss_and_grads(model, j, X[idx], Y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss training head {j} at epoch {epoch}, batch {bi}")
            model.trunk = [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(model.trunk, tg)]
            model.heads[j] = [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(model.heads[j], hg)]
            losses.append(loss)
        trace.append(float(np.mean(losses)))
    return model, trace


def score_heads(model: EnsembleModel, X, y, threshold: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """F+G of each head on ``(X, y)`` and the normalized head weights."""
    O = head_outputs(model, X)
    s = np.array([compute_metrics(confusion(y, (O[:, k] >= threshold).astype(int))).f_plus_g
                  for k in range(model.K)])
    return s, weights_from_scores(s)


def weights_from_scores(s) -> np.ndarray:
    """``s / sum(s)``; uniform when every score is zero."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("head scores must be non-negative")
    total = s.sum()
    return s / total if total > 0 else np.full(s.size, 1.0 / s.size)


def ensemble_predict(model: EnsembleModel, X, threshold: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    R = head_outputs(model, X) @ model.head_weights
    return R, (R >= threshold).astype(np.int64)
