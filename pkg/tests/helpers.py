"""Shared test utilities: independent oracle primitives, random-instance
generators, and a minimal in-process bridge server double. Oracles here
deliberately avoid the package's kernel code paths; they enumerate
neighborhoods from plain edge sets and sum with a scalar re-implementation
of the documented halving tree."""

from __future__ import annotations

import csv
import json
import math
import threading
import time

import numpy as np

from graphtab import CATEGORICAL, NUMERICAL, Column, Dataset, FeatureTable, TaskSpec, build_graph


def halving_sum(values) -> float:
    """Adjacent-pairing tree sum, scalar reference implementation."""
    buf = [float(v) for v in values]
    if not buf:
        return 0.0
    while len(buf) > 1:
        half = len(buf) // 2
        nxt = [buf[2 * i] + buf[2 * i + 1] for i in range(half)]
        if len(buf) % 2:
            nxt.append(buf[-1])
        buf = nxt
    return buf[0]


def sorted_halving_sum(values) -> float:
    return halving_sum(sorted(float(v) for v in values))


def adjacency_sets(n: int, edges) -> list[set[int]]:
    """Neighbor sets from an undirected edge list (independent of CSR)."""
    adj = [set() for _ in range(n)]
    for u, v in edges:
        if u != v:
            adj[int(u)].add(int(v))
            adj[int(v)].add(int(u))
    return adj


def random_edges(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)
             if rng.random() < p]
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def random_graph(n: int, p: float, seed: int):
    """(Graph, edge list) with the edge list kept for oracle use."""
    rng = np.random.default_rng(seed)
    edges = random_edges(n, p, rng)
    graph, _ = build_graph(n, edges)
    return graph, edges


def random_feature_table(n: int, rng: np.random.Generator,
                         n_numerical: int = 2, n_categorical: int = 1,
                         missing_rate: float = 0.1) -> FeatureTable:
    cols = []
    for j in range(n_numerical):
        vals = rng.standard_normal(n)
        vals[rng.random(n) < missing_rate] = np.nan
        cols.append(Column(f"num_{j}", NUMERICAL, vals))
    for j in range(n_categorical):
        n_cats = int(rng.integers(2, 5))
        codes = rng.integers(0, n_cats, size=n).astype(np.int64)
        codes[rng.random(n) < missing_rate] = -1
        cats = tuple(f"c{j}_{v}" for v in range(n_cats))
        cols.append(Column(f"cat_{j}", CATEGORICAL, codes, cats))
    return FeatureTable(n, tuple(cols))


def random_dataset(n: int, p: float, seed: int, task_kind: str = "binary",
                   n_classes: int = 2, missing_rate: float = 0.1,
                   n_numerical: int = 2, n_categorical: int = 1) -> Dataset:
    graph, _ = random_graph(n, p, seed)
    rng = np.random.default_rng(seed + 1)
    features = random_feature_table(n, rng, n_numerical, n_categorical,
                                    missing_rate)
    if task_kind == "regression":
        task = TaskSpec(task_kind, rng.standard_normal(n))
    else:
        task = TaskSpec(task_kind, rng.integers(0, n_classes, size=n),
                        n_classes=n_classes)
    return Dataset(graph, features, task)


# ---------------------------------------------------------------------------
# brute-force oracles


def nfa_oracle(n: int, edges, features: FeatureTable) -> np.ndarray:
    """Per-node loop over neighbor sets; numerical mean via the sorted halving
    tree (the documented canonical reduction), max/min via python builtins."""
    adj = adjacency_sets(n, edges)
    out_cols = []
    for col in features.columns:
        if col.kind == NUMERICAL:
            mean = np.full(n, np.nan)
            vmax = np.full(n, np.nan)
            vmin = np.full(n, np.nan)
            for i in range(n):
                vals = [col.values[j] for j in sorted(adj[i])
                        if not math.isnan(col.values[j])]
                if vals:
                    mean[i] = sorted_halving_sum(vals) / len(vals)
                    vmax[i] = max(vals)
                    vmin[i] = min(vals)
            out_cols.extend([mean, vmax, vmin])
        else:
            v = len(col.categories)
            freqs = np.full((n, v), np.nan)
            for i in range(n):
                codes = [int(col.values[j]) for j in sorted(adj[i])
                         if col.values[j] >= 0]
                if codes:
                    for c in range(v):
                        freqs[i, c] = codes.count(c) / len(codes)
            out_cols.extend(freqs.T)
    return np.column_stack(out_cols) if out_cols else np.zeros((n, 0))


def pagerank_oracle(n: int, edges, damping: float = 0.85, tol: float = 1e-9,
                    max_iter: int = 1000) -> np.ndarray:
    """Dense power iteration with plain numpy sums."""
    adj = np.zeros((n, n))
    for u, v in edges:
        if u != v:
            adj[u, v] = 1.0
            adj[v, u] = 1.0
    deg = adj.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rownorm = np.where(deg[:, None] > 0, adj / np.where(deg == 0, 1, deg)[:, None], 0.0)
    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        dangling = v[deg == 0].sum()
        v_next = damping * (rownorm.T @ v) + (damping * dangling + 1 - damping) / n
        if np.abs(v_next - v).sum() < tol:
            return v_next
        v = v_next
    raise AssertionError("oracle power iteration did not converge")


def laplacian_dense_oracle(n: int, edges) -> tuple[np.ndarray, np.ndarray, int]:
    """Full eigendecomposition of the symmetric normalized Laplacian on the
    non-isolated subgraph, plus the component count (for zero exclusion)."""
    adj = np.zeros((n, n))
    for u, v in edges:
        if u != v:
            adj[u, v] = 1.0
            adj[v, u] = 1.0
    deg = adj.sum(axis=1)
    keep = np.flatnonzero(deg > 0)
    sub = adj[np.ix_(keep, keep)]
    dsub = deg[keep]
    inv_sqrt = 1.0 / np.sqrt(dsub)
    lap = np.eye(keep.size) - inv_sqrt[:, None] * sub * inv_sqrt[None, :]
    vals, vecs = np.linalg.eigh(lap)
    # component count by DFS over neighbor sets
    seen = [False] * n
    n_comp = 0
    adj_sets = adjacency_sets(n, edges)
    for s in range(n):
        if seen[s] or deg[s] == 0:
            continue
        n_comp += 1
        stack = [s]
        seen[s] = True
        while stack:
            u = stack.pop()
            for w in adj_sets[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
    full_vecs = np.zeros((n, vecs.shape[1]))
    full_vecs[keep] = vecs
    return vals, full_vecs, n_comp


def average_precision_oracle(scores: np.ndarray, labels: np.ndarray) -> float:
    """Threshold scan: for every distinct score, precision at that cutoff and
    the recall step it contributes. Quadratic and independent of the
    implementation's grouping logic."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    total_pos = labels.sum()
    ap = 0.0
    prev_recall = 0.0
    for s in sorted(set(scores.tolist()), reverse=True):
        picked = scores >= s
        tp = int(labels[picked].sum())
        precision = tp / int(picked.sum())
        recall = tp / total_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


# ---------------------------------------------------------------------------
# bridge server double


def read_request_dir(req_dir):
    """Parse one bridge request directory into plain python structures."""
    meta = json.loads((req_dir / "meta.json").read_text(encoding="utf-8"))

    def read_csv(path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        return rows[0], rows[1:]

    train_header, train_rows = read_csv(req_dir / "train.csv")
    test_header, test_rows = read_csv(req_dir / "test.csv")
    return {"meta": meta,
            "train_header": train_header, "train_rows": train_rows,
            "test_header": test_header, "test_rows": test_rows}


def uniform_reply(req_dir):
    """Reference handler: uniform probabilities / zero values."""
    parsed = read_request_dir(req_dir)
    n_test = len(parsed["test_rows"])
    if parsed["meta"]["task"] == "regression":
        lines = ["0.0" for _ in range(n_test)]
    else:
        c = parsed["meta"]["n_classes"]
        lines = [",".join([repr(1.0 / c)] * c) for _ in range(n_test)]
    (req_dir / "predictions.csv").write_text("\n".join(lines) + "\n",
                                             encoding="utf-8")
    (req_dir / "DONE").touch()


class BridgeDouble:
    """Background thread that answers bridge requests under ``root`` with
    ``handler(req_dir)``. Use as a context manager."""

    def __init__(self, root, handler=uniform_reply):
        self.root = root
        self.handler = handler
        self.requests = []
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._serve, daemon=True)

    def _serve(self):
        handled = set()
        while not self._stop.is_set():
            for ready in sorted(self.root.glob("*/READY")):
                req_dir = ready.parent
                if req_dir in handled:
                    continue
                handled.add(req_dir)
                self.requests.append(req_dir)
                self.handler(req_dir)
            time.sleep(0.01)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join(timeout=5.0)
        return False
