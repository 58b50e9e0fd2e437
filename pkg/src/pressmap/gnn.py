"""Possession outcome prediction network over PPM sequences.

Three message-passing layers with edge-conditioned messages, ReLU, global
mean pooling over nodes, mean over the 50 frames, dropout and a 2-class
head. The softmax probability of losing possession is the team pressure.

Per layer, node v updates as

    h_v <- relu(W_self h_v + mean_{u != v} W_msg [h_u ; e_uv] + b)

On a complete graph the mean message splits exactly into
``W_h mean_{u != v} h_u + W_e mean_{u != v} e_uv`` with
``W_msg = [W_h | W_e]``; the neighbour mean is ``(sum_u h_u - h_v)/(n-1)``
and the edge mean is a constant of the graph. Forward and backward use that
factorization, so gradients are exact while training stays a handful of
dense matmuls per layer.

Everything is float64 numpy and deterministic given the seeds.
"""

from __future__ import annotations

import copy
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .datamodel import ValidationError
from .ppm import (
    EDGE_INDEX_12,
    FRAMES_PER_SEQUENCE,
    NODE_FEATURE_DIM,
    EDGE_FEATURE_DIM,
    NODES_PER_GRAPH,
    PPMSequence,
    VARIANTS,
)

N_LAYERS = 3
N_CLASSES = 2  # index 0 = lose, index 1 = keep
CHECKPOINT_MAGIC = b"POPM1"

#: in-edge rows of EDGE_INDEX_12 grouped by target node, fixed order
_IN_ROWS_12 = np.array(
    [[r for r, (u, v) in enumerate(EDGE_INDEX_12) if v == t] for t in range(NODES_PER_GRAPH)]
)


class TrainingError(RuntimeError):
    """Raised when optimization cannot proceed (bad data, diverged loss)."""


@dataclass
class LayerParams:
    w_self: np.ndarray  # (hidden, d_in)
    w_msg: np.ndarray   # (hidden, d_in + edge_dim)
    bias: np.ndarray    # (hidden,)


@dataclass
class POPModel:
    """Parameters of the possession outcome predictor."""

    layers: list[LayerParams]
    head_w: np.ndarray  # (2, hidden)
    head_b: np.ndarray  # (2,)
    variant: str
    node_dim: int = NODE_FEATURE_DIM
    edge_dim: int = EDGE_FEATURE_DIM
    hidden_width: int = 32
    dropout_rate: float = 0.5
    version: int = 0  # bumped on every optimizer step; guards stale caches

    def check_shapes(self) -> None:
        if len(self.layers) != N_LAYERS:
            raise ValidationError(f"expected {N_LAYERS} layers, got {len(self.layers)}")
        d_in = self.node_dim
        for i, layer in enumerate(self.layers):
            if layer.w_self.shape != (self.hidden_width, d_in):
                raise ValidationError(f"layer {i}: w_self shape {layer.w_self.shape}")
            if layer.w_msg.shape != (self.hidden_width, d_in + self.edge_dim):
                raise ValidationError(f"layer {i}: w_msg shape {layer.w_msg.shape}")
            if layer.bias.shape != (self.hidden_width,):
                raise ValidationError(f"layer {i}: bias shape {layer.bias.shape}")
            d_in = self.hidden_width
        if self.head_w.shape != (N_CLASSES, self.hidden_width):
            raise ValidationError(f"head shape {self.head_w.shape}")
        if self.head_b.shape != (N_CLASSES,):
            raise ValidationError(f"head bias shape {self.head_b.shape}")
        for name, arr in named_params(self):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"non-finite parameter block {name}")


@dataclass(frozen=True)
class Prediction:
    p_keep: float
    p_lose: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_keep <= 1.0 and 0.0 <= self.p_lose <= 1.0):
            raise ValidationError("probabilities outside [0, 1]")
        if abs(self.p_keep + self.p_lose - 1.0) > 1e-9:
            raise ValidationError("probabilities must sum to 1")

    @property
    def team_pressure(self) -> float:
        return self.p_lose


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 30
    seed: int = 0
    optimizer: str = "adam"  # or "sgd-momentum"
    momentum: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    val_fraction: float = 0.2
    hidden_width: int = 32
    dropout_rate: float = 0.5

    def __post_init__(self) -> None:
        if min(self.learning_rate, self.batch_size, self.epochs, self.hidden_width) <= 0:
            raise ValidationError("hyperparameters must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValidationError("val_fraction must be in (0, 1)")
        if self.optimizer not in ("adam", "sgd-momentum"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError("dropout_rate must be in [0, 1)")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    split: str
    loss: float
    accuracy: float


@dataclass
class TrainResult:
    model: POPModel
    history: list[EpochMetrics]
    best_epoch: int
    best_val_accuracy: float


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # [true][predicted]
    n_examples: int


@dataclass
class ForwardCache:
    model_version: int
    inputs: list[np.ndarray]   # H going into each layer
    neigh: list[np.ndarray]    # neighbour means going into each layer
    relu_mask: list[np.ndarray]
    edge_mean: np.ndarray
    pooled: np.ndarray         # sequence embedding before dropout (B, h)
    dropped: np.ndarray        # embedding after dropout (B, h)
    drop_mask: np.ndarray | None
    probs: np.ndarray          # (B, 2)


def init_model(
    variant: str,
    seed: int = 0,
    hidden_width: int = 32,
    node_dim: int = NODE_FEATURE_DIM,
    edge_dim: int = EDGE_FEATURE_DIM,
    dropout_rate: float = 0.5,
) -> POPModel:
    """Seeded uniform initialization in +-sqrt(6 / (fan_in + fan_out))."""
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB0D]))

    def glorot(shape):
        bound = math.sqrt(6.0 / (shape[0] + shape[1]))
        return rng.uniform(-bound, bound, size=shape)

    layers = []
    d_in = node_dim
    for _ in range(N_LAYERS):
        layers.append(
            LayerParams(
                w_self=glorot((hidden_width, d_in)),
                w_msg=glorot((hidden_width, d_in + edge_dim)),
                bias=np.zeros(hidden_width),
            )
        )
        d_in = hidden_width
    return POPModel(
        layers=layers,
        head_w=glorot((N_CLASSES, hidden_width)),
        head_b=np.zeros(N_CLASSES),
        variant=variant,
        node_dim=node_dim,
        edge_dim=edge_dim,
        hidden_width=hidden_width,
        dropout_rate=dropout_rate,
    )


def named_params(model: POPModel) -> list[tuple[str, np.ndarray]]:
    """Parameter blocks in declared (checkpoint) order."""
    out = []
    for i, layer in enumerate(model.layers):
        out.append((f"layer{i}.w_self", layer.w_self))
        out.append((f"layer{i}.w_msg", layer.w_msg))
        out.append((f"layer{i}.bias", layer.bias))
    out.append(("head.w", model.head_w))
    out.append(("head.b", model.head_b))
    return out


def sequence_tensors(seq: PPMSequence) -> tuple[np.ndarray, np.ndarray]:
    """Node features (T, n, d) and per-node mean in-edge features (T, n, e)."""
    nodes = np.stack([g.node_features for g in seq.graphs])
    edge_mean = np.stack([g.edge_features[_IN_ROWS_12].mean(axis=1) for g in seq.graphs])
    return nodes, edge_mean


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(
    model: POPModel,
    nodes: np.ndarray,      # (B, T, n, d)
    edge_mean: np.ndarray,  # (B, T, n, e)
    drop_mask: np.ndarray | None,  # (B, h) boolean, None for eval
    check_finite: bool = False,
) -> ForwardCache:
    n = nodes.shape[2]
    h = nodes
    inputs, neighs, masks = [], [], []
    for li, layer in enumerate(model.layers):
        d_in = h.shape[-1]
        if n > 1:
            neigh = (h.sum(axis=2, keepdims=True) - h) / (n - 1)
        else:
            neigh = np.zeros_like(h)
        w_h = layer.w_msg[:, :d_in]
        w_e = layer.w_msg[:, d_in:]
        z = h @ layer.w_self.T + neigh @ w_h.T + edge_mean @ w_e.T + layer.bias
        if check_finite and not np.all(np.isfinite(z)):
            raise ValidationError(f"non-finite activation in layer {li}")
        mask = z > 0.0
        inputs.append(h)
        neighs.append(neigh)
        masks.append(mask)
        h = np.where(mask, z, 0.0)
    pooled = h.mean(axis=2).mean(axis=1)  # (B, h)
    if drop_mask is not None:
        keep = 1.0 - model.dropout_rate
        dropped = pooled * drop_mask / keep
    else:
        dropped = pooled
    logits = dropped @ model.head_w.T + model.head_b
    if check_finite and not np.all(np.isfinite(logits)):
        raise ValidationError("non-finite activation in head")
    return ForwardCache(
        model_version=model.version,
        inputs=inputs,
        neigh=neighs,
        relu_mask=masks,
        edge_mean=edge_mean,
        pooled=pooled,
        dropped=dropped,
        drop_mask=drop_mask,
        probs=_softmax(logits),
    )


@dataclass
class Gradients:
    layers: list[LayerParams]
    head_w: np.ndarray
    head_b: np.ndarray


def _backward_batch(model: POPModel, cache: ForwardCache, labels: np.ndarray) -> Gradients:
    """Exact gradients of the mean cross-entropy over the batch."""
    if cache.model_version != model.version:
        raise TrainingError("stale activation cache: model parameters changed since forward")
    batch, n_t, n, _ = cache.inputs[0].shape

    d_logits = cache.probs.copy()
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch

    g_head_w = d_logits.T @ cache.dropped
    g_head_b = d_logits.sum(axis=0)
    d_drop = d_logits @ model.head_w
    if cache.drop_mask is not None:
        d_pool = d_drop * cache.drop_mask / (1.0 - model.dropout_rate)
    else:
        d_pool = d_drop
    # undo mean over frames then over nodes
    d_h = np.broadcast_to(
        d_pool[:, None, None, :] / (n_t * n), (batch, n_t, n, d_pool.shape[-1])
    )

    g_layers: list[LayerParams] = [None] * N_LAYERS  # type: ignore[list-item]
    for li in range(N_LAYERS - 1, -1, -1):
        layer = model.layers[li]
        h_in = cache.inputs[li]
        d_in = h_in.shape[-1]
        w_h = layer.w_msg[:, :d_in]
        w_e = layer.w_msg[:, d_in:]
        d_z = np.where(cache.relu_mask[li], d_h, 0.0)

        rows = d_z.reshape(-1, d_z.shape[-1])
        g_self = rows.T @ h_in.reshape(-1, d_in)
        g_msg_h = rows.T @ cache.neigh[li].reshape(-1, d_in)
        g_msg_e = rows.T @ cache.edge_mean.reshape(-1, model.edge_dim)
        g_layers[li] = LayerParams(
            w_self=g_self,
            w_msg=np.concatenate([g_msg_h, g_msg_e], axis=1),
            bias=rows.sum(axis=0),
        )

        d_h = d_z @ layer.w_self
        d_neigh = d_z @ w_h
        if n > 1:
            d_h = d_h + (d_neigh.sum(axis=2, keepdims=True) - d_neigh) / (n - 1)
    return Gradients(layers=g_layers, head_w=g_head_w, head_b=g_head_b)


def _named_grads(grads: Gradients) -> list[tuple[str, np.ndarray]]:
    out = []
    for i, layer in enumerate(grads.layers):
        out.append((f"layer{i}.w_self", layer.w_self))
        out.append((f"layer{i}.w_msg", layer.w_msg))
        out.append((f"layer{i}.bias", layer.bias))
    out.append(("head.w", grads.head_w))
    out.append(("head.b", grads.head_b))
    return out


def _dropout_mask(model: POPModel, rng: np.random.Generator, batch: int) -> np.ndarray:
    keep = 1.0 - model.dropout_rate
    return rng.random((batch, model.hidden_width)) < keep


def _check_sequence(model: POPModel, seq: PPMSequence) -> None:
    if len(seq.graphs) != FRAMES_PER_SEQUENCE:
        raise ValidationError(f"sequence must hold {FRAMES_PER_SEQUENCE} graphs")
    if seq.variant != model.variant:
        raise ValidationError(
            f"variant mismatch: model trained on {model.variant!r}, sequence is {seq.variant!r}"
        )


def forward(
    model: POPModel,
    seq: PPMSequence,
    mode: str = "eval",
    rng_seed: int = 0,
) -> tuple[Prediction, ForwardCache | None]:
    """Run the network on one sequence.

    Train mode applies inverted dropout seeded by ``rng_seed`` and returns
    the activation cache needed by :func:`backward`; eval mode ignores the
    seed and returns no cache.
    """
    if mode not in ("train", "eval"):
        raise ValidationError(f"mode must be train or eval, got {mode!r}")
    _check_sequence(model, seq)
    nodes, edge_mean = sequence_tensors(seq)
    mask = None
    if mode == "train":
        rng = np.random.default_rng(np.random.SeedSequence([rng_seed]))
        mask = _dropout_mask(model, rng, 1)
    cache = _forward_batch(model, nodes[None], edge_mean[None], mask, check_finite=True)
    pred = Prediction(p_keep=float(cache.probs[0, 1]), p_lose=float(cache.probs[0, 0]))
    return pred, (cache if mode == "train" else None)


def loss(pred: Prediction, label: int) -> float:
    """Negative log probability of the true class (0 = lose, 1 = keep)."""
    if label not in (0, 1):
        raise ValidationError(f"label must be 0 or 1, got {label}")
    p_true = pred.p_keep if label == 1 else pred.p_lose
    return -math.log(max(p_true, 1e-300))


def backward(model: POPModel, cache: ForwardCache, label: int) -> Gradients:
    """Gradients of the single-example loss cached by a train-mode forward."""
    if label not in (0, 1):
        raise ValidationError(f"label must be 0 or 1, got {label}")
    return _backward_batch(model, cache, np.array([label]))


def predict_pop(model: POPModel, seq: PPMSequence) -> Prediction:
    """Eval-mode prediction; ``team_pressure`` is the loss probability."""
    pred, _ = forward(model, seq, mode="eval")
    return pred


def _predict_batch(model: POPModel, sequences: Sequence[PPMSequence], chunk: int = 256) -> np.ndarray:
    probs = []
    for start in range(0, len(sequences), chunk):
        tensors = [sequence_tensors(s) for s in sequences[start:start + chunk]]
        nodes = np.stack([t[0] for t in tensors])
        edge_mean = np.stack([t[1] for t in tensors])
        probs.append(_forward_batch(model, nodes, edge_mean, None).probs)
    return np.concatenate(probs)


def evaluate(model: POPModel, dataset: Sequence[PPMSequence]) -> EvalResult:
    """Accuracy and confusion matrix with argmax decisions, ties -> keep."""
    if not dataset:
        raise ValidationError("cannot evaluate on an empty dataset")
    labels = _require_labels(dataset)
    for seq in dataset:
        _check_sequence(model, seq)
    probs = _predict_batch(model, dataset)
    predicted = (probs[:, 1] >= probs[:, 0]).astype(np.int64)
    confusion = np.zeros((2, 2), dtype=np.int64)
    for t, p in zip(labels, predicted):
        confusion[t, p] += 1
    accuracy = float((predicted == labels).mean())
    return EvalResult(accuracy=accuracy, confusion=confusion, n_examples=len(dataset))


def _require_labels(dataset: Sequence[PPMSequence]) -> np.ndarray:
    labels = []
    for seq in dataset:
        if seq.label is None:
            raise ValidationError("dataset contains an unlabeled sequence")
        labels.append(seq.label)
    return np.array(labels, dtype=np.int64)


def train(dataset: Sequence[PPMSequence], config: TrainConfig) -> TrainResult:
    """Mini-batch gradient descent; returns the best-validation snapshot.

    Deterministic for a fixed dataset and config: the split, the shuffles,
    the dropout masks and the update order all derive from ``config.seed``.
    """
    labels = _require_labels(dataset)
    if len(np.unique(labels)) < 2 or min(np.bincount(labels, minlength=2)) < 2:
        raise TrainingError("training needs at least 2 examples of each class")
    variants = {seq.variant for seq in dataset}
    if len(variants) != 1:
        raise TrainingError(f"dataset mixes variants {sorted(variants)}")

    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x5EED]))
    order = rng.permutation(len(dataset))
    n_val = max(1, round(len(dataset) * config.val_fraction))
    if n_val >= len(dataset):
        raise TrainingError("validation split leaves no training data")
    val_idx, train_idx = order[:n_val], order[n_val:]
    train_labels = labels[train_idx]
    if len(np.unique(train_labels)) < 2:
        raise TrainingError("training split lost a class; change seed or val_fraction")

    model = init_model(
        variant=next(iter(variants)),
        seed=config.seed,
        hidden_width=config.hidden_width,
        dropout_rate=config.dropout_rate,
    )

    nodes_all = np.stack([sequence_tensors(s)[0] for s in dataset])
    edges_all = np.stack([sequence_tensors(s)[1] for s in dataset])

    opt_state = {
        name: {"m": np.zeros_like(p), "v": np.zeros_like(p)} for name, p in named_params(model)
    }
    adam_t = 0

    def apply_update(grads: Gradients) -> None:
        nonlocal adam_t
        lr = config.learning_rate
        if config.optimizer == "adam":
            adam_t += 1
            b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
            for (name, p), (_, g) in zip(named_params(model), _named_grads(grads)):
                st = opt_state[name]
                st["m"] = b1 * st["m"] + (1 - b1) * g
                st["v"] = b2 * st["v"] + (1 - b2) * (g * g)
                m_hat = st["m"] / (1 - b1 ** adam_t)
                v_hat = st["v"] / (1 - b2 ** adam_t)
                p -= lr * m_hat / (np.sqrt(v_hat) + eps)
        else:
            for (name, p), (_, g) in zip(named_params(model), _named_grads(grads)):
                st = opt_state[name]
                st["m"] = config.momentum * st["m"] + g
                p -= lr * st["m"]
        model.version += 1

    def split_metrics(idx: np.ndarray, chunk: int = 256) -> tuple[float, float]:
        probs = np.concatenate([
            _forward_batch(model, nodes_all[idx[s:s + chunk]], edges_all[idx[s:s + chunk]], None).probs
            for s in range(0, len(idx), chunk)
        ])
        p_true = probs[np.arange(len(idx)), labels[idx]]
        mean_loss = float(-np.log(np.maximum(p_true, 1e-300)).mean())
        predicted = (probs[:, 1] >= probs[:, 0]).astype(np.int64)
        return mean_loss, float((predicted == labels[idx]).mean())

    history: list[EpochMetrics] = []
    best_epoch = -1
    best_val_acc = -1.0
    best_model = copy.deepcopy(model)

    for epoch in range(config.epochs):
        epoch_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xE0C, epoch]))
        shuffled = train_idx[epoch_rng.permutation(len(train_idx))]
        for start in range(0, len(shuffled), config.batch_size):
            batch_idx = shuffled[start:start + config.batch_size]
            mask = _dropout_mask(model, epoch_rng, len(batch_idx))
            cache = _forward_batch(model, nodes_all[batch_idx], edges_all[batch_idx], mask)
            batch_labels = labels[batch_idx]
            p_true = cache.probs[np.arange(len(batch_idx)), batch_labels]
            batch_loss = float(-np.log(np.maximum(p_true, 1e-300)).mean())
            if not math.isfinite(batch_loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            apply_update(_backward_batch(model, cache, batch_labels))

        train_loss, train_acc = split_metrics(train_idx)
        val_loss, val_acc = split_metrics(val_idx)
        history.append(EpochMetrics(epoch, "train", train_loss, train_acc))
        history.append(EpochMetrics(epoch, "val", val_loss, val_acc))
        if val_acc > best_val_acc:
            best_val_acc = val_acc
            best_epoch = epoch
            best_model = copy.deepcopy(model)

    return TrainResult(
        model=best_model, history=history, best_epoch=best_epoch, best_val_accuracy=best_val_acc
    )


def gradient_check(
    seed: int = 0,
    step: float = 1e-6,
    n_nodes: int = 3,
    n_frames: int = 2,
    hidden_width: int = 4,
    node_dim: int = 5,
    train_mode: bool = True,
) -> dict[str, float]:
    """Central-difference check of backward on a small random graph.

    Returns the max relative error per parameter block; every value should
    sit well below 1e-4 in double precision.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xFD]))
    model = init_model(
        "tracking", seed=seed, hidden_width=hidden_width, node_dim=node_dim
    )
    nodes = rng.uniform(-1.0, 1.0, size=(1, n_frames, n_nodes, node_dim))
    edge_mean = rng.uniform(-1.0, 1.0, size=(1, n_frames, n_nodes, EDGE_FEATURE_DIM))
    label = np.array([1])
    mask = None
    if train_mode:
        mask = _dropout_mask(model, np.random.default_rng(np.random.SeedSequence([seed, 0xD0])), 1)

    def loss_value() -> float:
        cache = _forward_batch(model, nodes, edge_mean, mask)
        return float(-np.log(max(cache.probs[0, label[0]], 1e-300)))

    cache = _forward_batch(model, nodes, edge_mean, mask)
    analytic = _named_grads(_backward_batch(model, cache, label))

    report: dict[str, float] = {}
    for (name, param), (_, grad) in zip(named_params(model), analytic):
        worst = 0.0
        flat_p = param.ravel()
        flat_g = grad.ravel()
        for i in range(flat_p.size):
            original = flat_p[i]
            flat_p[i] = original + step
            up = loss_value()
            flat_p[i] = original - step
            down = loss_value()
            flat_p[i] = original
            fd = (up - down) / (2.0 * step)
            rel = abs(fd - flat_g[i]) / max(abs(fd) + abs(flat_g[i]), 1e-6)
            worst = max(worst, rel)
        report[name] = worst
    return report


def save_model(model: POPModel) -> bytes:
    """Versioned checkpoint: magic, JSON dims header, row-major LE float64."""
    model.check_shapes()
    header = {
        "node_dim": model.node_dim,
        "edge_dim": model.edge_dim,
        "hidden_width": model.hidden_width,
        "n_layers": N_LAYERS,
        "n_classes": N_CLASSES,
        "variant": model.variant,
        "dropout_rate": model.dropout_rate,
    }
    out = io.BytesIO()
    out.write(CHECKPOINT_MAGIC + b"\n")
    out.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
    for _, param in named_params(model):
        out.write(np.ascontiguousarray(param, dtype="<f8").tobytes())
    return out.getvalue()


def load_model(blob: bytes) -> POPModel:
    stream = io.BytesIO(blob)
    magic = stream.readline().rstrip(b"\n")
    if magic != CHECKPOINT_MAGIC:
        raise ValidationError(f"bad checkpoint magic {magic!r}")
    header = json.loads(stream.readline().decode("ascii"))
    hidden = header["hidden_width"]
    node_dim = header["node_dim"]
    edge_dim = header["edge_dim"]

    def read_block(shape) -> np.ndarray:
        n = int(np.prod(shape))
        raw = stream.read(n * 8)
        if len(raw) != n * 8:
            raise ValidationError("checkpoint truncated")
        return np.frombuffer(raw, dtype="<f8").reshape(shape).copy()

    layers = []
    d_in = node_dim
    for _ in range(header["n_layers"]):
        layers.append(
            LayerParams(
                w_self=read_block((hidden, d_in)),
                w_msg=read_block((hidden, d_in + edge_dim)),
                bias=read_block((hidden,)),
            )
        )
        d_in = hidden
    model = POPModel(
        layers=layers,
        head_w=read_block((header["n_classes"], hidden)),
        head_b=read_block((header["n_classes"],)),
        variant=header["variant"],
        node_dim=node_dim,
        edge_dim=edge_dim,
        hidden_width=hidden,
        dropout_rate=header["dropout_rate"],
    )
    if stream.read(1):
        raise ValidationError("checkpoint has trailing bytes")
    model.check_shapes()
    return model


def serialize_metrics(history: Iterable[EpochMetrics]) -> str:
    out = ["epoch,split,loss,accuracy"]
    for m in history:
        out.append(f"{m.epoch},{m.split},{repr(m.loss)},{repr(m.accuracy)}")
    return "\n".join(out) + "\n"
