"""Randomized structural encodings.

Draw M i.i.d. standard-normal feature matrices, push each through a small
mean-aggregation message-passing network (ReLU hidden layers, linear output,
no normalization, no residual), and average the outputs in draw order. With
the shipped weight seed this works untrained and identically across machines;
a stochastic-gradient training mode is available for the supervised variant.

Weights are stored in 32-bit floats (that is what serializes); the forward
and backward passes run in 64-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Graph
from .errors import InputDataError, NumericError
from .kernels import mean_aggregate, seg_sum

# shipped constant so untrained encodings agree across runs and machines
DEFAULT_WEIGHT_SEED = 1729

_MAGIC = b"GTPEARL1"


@dataclass(frozen=True)
class PearlConfig:
    m_draws: int = 8
    d_in: int = 16
    d_hidden: int = 64
    d_out: int = 16
    n_layers: int = 2
    weight_seed: int = DEFAULT_WEIGHT_SEED
    draw_seed: int = 0

    def __post_init__(self):
        if min(self.d_in, self.d_hidden, self.d_out) < 1:
            raise InputDataError("all PEARL dimensions must be at least 1")
        if self.m_draws < 1:
            raise InputDataError("m_draws must be at least 1")
        if self.n_layers < 1:
            raise InputDataError("n_layers must be at least 1")

    def layer_dims(self) -> list[tuple[int, int]]:
        sizes = [self.d_in] + [self.d_hidden] * (self.n_layers - 1) + [self.d_out]
        return list(zip(sizes[:-1], sizes[1:]))


@dataclass(frozen=True)
class PearlWeights:
    """Per-layer (transform, bias) pairs plus the seed they came from."""

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    seed: int

    def __post_init__(self):
        frozen = []
        prev_out = None
        for w, b in self.layers:
            w = np.ascontiguousarray(w, dtype=np.float32)
            b = np.ascontiguousarray(b, dtype=np.float32)
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise InputDataError("inconsistent PEARL layer shapes")
            if prev_out is not None and w.shape[0] != prev_out:
                raise InputDataError("PEARL layer dimensions do not chain")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NumericError("non-finite PEARL weights")
            prev_out = w.shape[1]
            w.setflags(write=False)
            b.setflags(write=False)
            frozen.append((w, b))
        object.__setattr__(self, "layers", tuple(frozen))

    @property
    def d_in(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def d_out(self) -> int:
        return self.layers[-1][0].shape[1]


def init_weights(cfg: PearlConfig) -> PearlWeights:
    """Uniform init with scale sqrt(6/(fan_in+fan_out)), deterministic in
    weight_seed; the same seed yields the same weights on any machine."""
    rng = np.random.default_rng(cfg.weight_seed)
    layers = []
    for fan_in, fan_out in cfg.layer_dims():
        scale = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-scale, scale, size=(fan_in, fan_out))
        b = rng.uniform(-scale, scale, size=fan_out)
        layers.append((w.astype(np.float32), b.astype(np.float32)))
    return PearlWeights(tuple(layers), cfg.weight_seed)


def gnn_forward(graph: Graph, node_feats: np.ndarray,
                weights: PearlWeights) -> np.ndarray:
    """Per layer: h <- ReLU(W . mean over N(i) u {i} of h + b), final layer
    linear. Isolated nodes aggregate over themselves only."""
    h = np.ascontiguousarray(node_feats, dtype=np.float64)
    if h.shape != (graph.n_nodes, weights.d_in):
        raise InputDataError(
            f"node features must be {graph.n_nodes} x {weights.d_in}, got {h.shape}")
    last = len(weights.layers) - 1
    with np.errstate(invalid="ignore", over="ignore"):  # guarded below
        for idx, (w, b) in enumerate(weights.layers):
            agg = mean_aggregate(graph.row_offsets, graph.col_indices, h)
            h = agg @ w.astype(np.float64) + b.astype(np.float64)
            if idx != last:
                h = np.maximum(h, 0.0)
    if not np.isfinite(h).all():
        raise NumericError("non-finite PEARL forward output")
    return h


def pearl_encode(graph: Graph, cfg: PearlConfig,
                 weights: PearlWeights | None = None) -> np.ndarray:
    """Average of gnn_forward over m_draws seeded standard-normal draws.

    The accumulation runs in draw order, so the result is a pure function of
    (draw_seed, weight_seed, m_draws).
    """
    if weights is None:
        weights = init_weights(cfg)
    rng = np.random.default_rng(cfg.draw_seed)
    acc = np.zeros((graph.n_nodes, weights.d_out))
    for _ in range(cfg.m_draws):
        feats = rng.standard_normal((graph.n_nodes, cfg.d_in))
        acc += gnn_forward(graph, feats, weights)
    return acc / cfg.m_draws


# ---------------------------------------------------------------------------
# training


def _sum_aggregate(graph: Graph, x: np.ndarray) -> np.ndarray:
    """(A + I) x, the transpose counterpart of mean aggregation."""
    out = x.copy()
    for f in range(x.shape[1]):
        out[:, f] += seg_sum(x[graph.col_indices, f], graph.row_offsets)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def train_pearl(graph: Graph, cfg: PearlConfig, targets: np.ndarray,
                train_idx: np.ndarray, task_kind: str, n_classes: int | None = None,
                weights: PearlWeights | None = None, lr: float = 0.01,
                steps: int = 100) -> tuple[PearlWeights, list[float]]:
    """Supervised PEARL: plain stochastic gradient steps, one fresh random
    draw per step, through the network and a linear head on the train rows.
    The head is discarded; the adapted weights are returned with the loss
    trace."""
    if task_kind not in ("binary", "multiclass", "regression"):
        raise InputDataError(f"unknown task kind: {task_kind!r}")
    classification = task_kind != "regression"
    if classification and not n_classes:
        raise InputDataError("classification training needs n_classes")
    if lr <= 0 or steps < 1:
        raise InputDataError("lr must be positive and steps at least 1")
    train_idx = np.asarray(train_idx, dtype=np.int64)
    if weights is None:
        weights = init_weights(cfg)

    n = graph.n_nodes
    inv_cnt = 1.0 / (np.diff(graph.row_offsets) + 1.0)
    ws = [w.astype(np.float64) for w, _ in weights.layers]
    bs = [b.astype(np.float64) for _, b in weights.layers]
    head_dim = n_classes if classification else 1
    w_head = np.zeros((weights.d_out, head_dim))
    b_head = np.zeros(head_dim)
    if classification:
        y_onehot = np.zeros((train_idx.size, head_dim))
        y_onehot[np.arange(train_idx.size), targets[train_idx].astype(np.int64)] = 1.0
    else:
        y_real = np.asarray(targets, dtype=np.float64)[train_idx]

    rng = np.random.default_rng(cfg.draw_seed)
    last = len(ws) - 1
    losses = []
    for _ in range(steps):
        x = rng.standard_normal((n, cfg.d_in))
        # forward, caching aggregated inputs and pre-activations
        aggs, zs = [], []
        h = x
        for idx in range(len(ws)):
            agg = mean_aggregate(graph.row_offsets, graph.col_indices, h)
            z = agg @ ws[idx] + bs[idx]
            aggs.append(agg)
            zs.append(z)
            h = z if idx == last else np.maximum(z, 0.0)
        emb = h

        scores = emb[train_idx] @ w_head + b_head
        if classification:
            probs = _softmax(scores)
            labels = targets[train_idx].astype(np.int64)
            loss = -np.mean(np.log(probs[np.arange(train_idx.size), labels] + 1e-12))
            d_scores = (probs - y_onehot) / train_idx.size
        else:
            resid = scores[:, 0] - y_real
            loss = 0.5 * float(np.mean(resid ** 2))
            d_scores = (resid / train_idx.size)[:, None]
        losses.append(float(loss))

        d_wh = emb[train_idx].T @ d_scores
        d_bh = d_scores.sum(axis=0)
        d_h = np.zeros((n, weights.d_out))
        d_h[train_idx] = d_scores @ w_head.T

        for idx in range(last, -1, -1):
            d_z = d_h if idx == last else d_h * (zs[idx] > 0.0)
            d_w = aggs[idx].T @ d_z
            d_b = d_z.sum(axis=0)
            if idx > 0:
                d_h = _sum_aggregate(graph, d_z @ ws[idx].T * inv_cnt[:, None])
            ws[idx] -= lr * d_w
            bs[idx] -= lr * d_b
        w_head -= lr * d_wh
        b_head -= lr * d_bh

    trained = tuple((w.astype(np.float32), b.astype(np.float32))
                    for w, b in zip(ws, bs))
    return PearlWeights(trained, weights.seed), losses


# ---------------------------------------------------------------------------
# serialization


def save_weights(weights: PearlWeights, path) -> None:
    """Binary block: magic, seed, layer count, per-layer dims, then row-major
    32-bit little-endian payloads (transform then bias per layer)."""
    parts = [_MAGIC, struct.pack("<qi", weights.seed, len(weights.layers))]
    for w, b in weights.layers:
        parts.append(struct.pack("<ii", w.shape[0], w.shape[1]))
    for w, b in weights.layers:
        parts.append(w.astype("<f4").tobytes(order="C"))
        parts.append(b.astype("<f4").tobytes(order="C"))
    Path(path).write_bytes(b"".join(parts))


def load_weights(path) -> PearlWeights:
    blob = Path(path).read_bytes()
    if blob[:8] != _MAGIC:
        raise InputDataError(f"{path}: not a PEARL weight file")
    seed, n_layers = struct.unpack_from("<qi", blob, 8)
    off = 8 + 12
    dims = []
    for _ in range(n_layers):
        dims.append(struct.unpack_from("<ii", blob, off))
        off += 8
    layers = []
    for d_in, d_out in dims:
        w = np.frombuffer(blob, dtype="<f4", count=d_in * d_out, offset=off)
        off += 4 * d_in * d_out
        b = np.frombuffer(blob, dtype="<f4", count=d_out, offset=off)
        off += 4 * d_out
        layers.append((w.reshape(d_in, d_out).copy(), b.copy()))
    if off != len(blob):
        raise InputDataError(f"{path}: trailing bytes in PEARL weight file")
    return PearlWeights(tuple(layers), int(seed))
