"""Synthetic graph generators: Erdős–Rényi and two-block SBM datasets.

The SBM dataset is built so that node features carry no label signal at all;
the class is recoverable only through the graph (assortative block structure).
It backs the end-to-end sanity checks and the `synth` CLI subcommand.
"""

from __future__ import annotations

import numpy as np

from .data import Column, Dataset, FeatureTable, Graph, TaskSpec, build_graph
from .errors import InputDataError

# above this many candidate pairs, switch from a dense Bernoulli mask to
# sampling a binomial edge count and drawing distinct pairs
_DENSE_PAIR_LIMIT = 1 << 22


def _pair_count(n: int) -> int:
    return n * (n - 1) // 2


def _sample_distinct_pairs(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m distinct unordered pairs over [0,n), uniform via rejection."""
    have = np.empty((0, 2), dtype=np.int64)
    while have.shape[0] < m:
        need = m - have.shape[0]
        cand = rng.integers(0, n, size=(need + need // 4 + 16, 2), dtype=np.int64)
        cand = cand[cand[:, 0] != cand[:, 1]]
        cand.sort(axis=1)
        have = np.unique(np.concatenate([have, cand]), axis=0)
    if have.shape[0] > m:
        keep = rng.choice(have.shape[0], size=m, replace=False)
        have = have[np.sort(keep)]
    return have


def _binomial_count(n_pairs: int, p: float, rng: np.random.Generator) -> int:
    if n_pairs < (1 << 31):
        return int(rng.binomial(n_pairs, p))
    # Poisson limit; indistinguishable at the edge densities we generate
    return int(rng.poisson(n_pairs * p))


def _gnp_edges(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    n_pairs = _pair_count(n)
    if n_pairs == 0 or p <= 0.0:
        return np.empty((0, 2), dtype=np.int64)
    if n_pairs <= _DENSE_PAIR_LIMIT:
        iu = np.triu_indices(n, k=1)
        mask = rng.random(n_pairs) < p
        return np.column_stack([iu[0][mask], iu[1][mask]]).astype(np.int64)
    return _sample_distinct_pairs(n, _binomial_count(n_pairs, p, rng), rng)


def gnp_graph(n_nodes: int, p: float, seed: int) -> Graph:
    """Erdős–Rényi G(n, p). Exact Bernoulli sampling for small n; for large n,
    a binomial edge count with uniform distinct pairs (the G(n, m) mixture)."""
    if not 0.0 <= p <= 1.0:
        raise InputDataError(f"edge probability must be in [0,1], got {p}")
    rng = np.random.default_rng(seed)
    graph, _ = build_graph(n_nodes, _gnp_edges(n_nodes, p, rng))
    return graph


def _cross_edges(nodes_a: np.ndarray, nodes_b: np.ndarray, p: float,
                 rng: np.random.Generator) -> np.ndarray:
    n_pairs = nodes_a.size * nodes_b.size
    if n_pairs == 0 or p <= 0.0:
        return np.empty((0, 2), dtype=np.int64)
    if n_pairs <= _DENSE_PAIR_LIMIT:
        mask = rng.random(n_pairs) < p
        ai, bi = np.divmod(np.flatnonzero(mask), nodes_b.size)
        return np.column_stack([nodes_a[ai], nodes_b[bi]])
    m = _binomial_count(n_pairs, p, rng)
    flat = np.unique(rng.integers(0, n_pairs, size=m + m // 4 + 16, dtype=np.int64))[:m]
    ai, bi = np.divmod(flat, nodes_b.size)
    return np.column_stack([nodes_a[ai], nodes_b[bi]])


def sbm_graph(block_sizes: tuple[int, ...], p_in: float, p_out: float,
              seed: int) -> tuple[Graph, np.ndarray]:
    """Stochastic block model. Returns the graph and the block label vector."""
    for p, name in ((p_in, "p_in"), (p_out, "p_out")):
        if not 0.0 <= p <= 1.0:
            raise InputDataError(f"{name} must be in [0,1], got {p}")
    sizes = [int(s) for s in block_sizes]
    if any(s <= 0 for s in sizes):
        raise InputDataError("block sizes must be positive")
    n = sum(sizes)
    labels = np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)
    chunks = []
    for a in range(len(sizes)):
        block_a = np.arange(bounds[a], bounds[a + 1], dtype=np.int64)
        inner = _gnp_edges(sizes[a], p_in, rng)
        if inner.size:
            chunks.append(inner + bounds[a])
        for b in range(a + 1, len(sizes)):
            block_b = np.arange(bounds[b], bounds[b + 1], dtype=np.int64)
            chunks.append(_cross_edges(block_a, block_b, p_out, rng))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    graph, _ = build_graph(n, edges)
    return graph, labels


def make_sbm_dataset(n_nodes: int = 1000, n_features: int = 8,
                     p_in: float = 0.02, p_out: float = 0.002,
                     seed: int = 0) -> Dataset:
    """Two-block SBM with pure-noise node features.

    Features are i.i.d. N(0,1), independent of the block, so a tabular model
    sees no signal in them; the label is carried only by graph structure.
    """
    if n_nodes < 4:
        raise InputDataError("need at least 4 nodes for a two-block dataset")
    sizes = (n_nodes // 2, n_nodes - n_nodes // 2)
    graph, labels = sbm_graph(sizes, p_in, p_out, seed)
    rng = np.random.default_rng(seed + 1)
    columns = tuple(
        Column(f"noise_{j}", "numerical", rng.standard_normal(n_nodes))
        for j in range(n_features))
    features = FeatureTable(n_nodes, columns)
    task = TaskSpec("binary", labels, n_classes=2)
    return Dataset(graph, features, task)
