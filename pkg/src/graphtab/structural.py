"""Structure-based node features: degree, PageRank, Laplacian eigenvectors.

PageRank and the Laplacian act on the symmetric adjacency from ``Graph``.
All PageRank reductions go through the value-sorted halving-tree kernels, so
relabeling nodes permutes the result bitwise. The eigensolver is dense up to
``_DENSE_EIG_CUTOFF`` nodes and a deflated Lanczos iteration beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Graph
from .errors import ConvergenceError, InputDataError, NumericError
from .kernels import csr_matvec, seg_sum_sorted, sorted_sum

_DENSE_EIG_CUTOFF = 2000
# eigenvalues below this are the per-component constant eigenvectors
_ZERO_EIG_THRESHOLD = 1e-10
_LANCZOS_SEED = 0x5EED


@dataclass(frozen=True)
class StructuralConfig:
    pagerank_damping: float = 0.85
    pagerank_tol: float = 1e-9
    pagerank_max_iter: int = 1000
    n_eigenvectors: int = 8
    eig_tol: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.pagerank_damping < 1.0:
            raise InputDataError(
                f"pagerank_damping must lie in (0,1), got {self.pagerank_damping}")
        if self.pagerank_tol <= 0.0 or self.eig_tol <= 0.0:
            raise InputDataError("tolerances must be positive")
        if self.pagerank_max_iter < 1:
            raise InputDataError("pagerank_max_iter must be at least 1")
        if self.n_eigenvectors < 0:
            raise InputDataError("n_eigenvectors must be non-negative")


@dataclass(frozen=True)
class StructuralFeatures:
    degree: np.ndarray
    pagerank: np.ndarray
    lap_eigs: np.ndarray

    def names(self) -> list[str]:
        return ["degree", "pagerank"] + [
            f"lap_eig_{j + 1}" for j in range(self.lap_eigs.shape[1])]

    def matrix(self) -> np.ndarray:
        """Columns in the fixed order [degree, pagerank, eig_1..eig_K]."""
        return np.column_stack([self.degree, self.pagerank, self.lap_eigs])


def degrees(graph: Graph) -> np.ndarray:
    return np.diff(graph.row_offsets).astype(np.float64)


def pagerank(graph: Graph, cfg: StructuralConfig | None = None) -> np.ndarray:
    """Power iteration with damping; degree-zero nodes teleport uniformly.

    Stops when the L1 change drops below ``pagerank_tol``. The neighbor sum,
    the dangling-mass sum, and the residual all use sorted halving-tree
    reductions, which makes the whole iteration (and its stopping decision)
    exactly node-permutation equivariant.
    """
    cfg = cfg or StructuralConfig()
    n = graph.n_nodes
    if n == 0:
        raise InputDataError("pagerank of an empty graph")
    deg = degrees(graph)
    isolated = np.flatnonzero(deg == 0.0)
    out_scale = np.where(deg > 0.0, deg, 1.0)
    d = cfg.pagerank_damping
    v = np.full(n, 1.0 / n)
    residual = float("inf")
    for _ in range(cfg.pagerank_max_iter):
        contrib = v / out_scale
        neigh = seg_sum_sorted(contrib[graph.col_indices], graph.row_offsets)
        dangling = sorted_sum(v[isolated]) if isolated.size else 0.0
        teleport = (d * dangling + (1.0 - d)) / n
        v_next = d * neigh + teleport
        residual = sorted_sum(np.abs(v_next - v))
        v = v_next
        if residual < cfg.pagerank_tol:
            return v
    raise ConvergenceError(
        f"pagerank did not converge within {cfg.pagerank_max_iter} iterations "
        f"(last L1 change {residual:.3e})", residual=residual)


def _gather_ranges(offsets: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Indices into col_indices covering the neighbor lists of ``nodes``."""
    starts = offsets[nodes]
    lens = offsets[nodes + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    cum_before = np.cumsum(lens) - lens
    return (np.arange(total, dtype=np.int64)
            - np.repeat(cum_before, lens) + np.repeat(starts, lens))


def component_labels(graph: Graph) -> tuple[np.ndarray, int]:
    """Connected-component label per node and the component count."""
    offsets, cols = graph.row_offsets, graph.col_indices
    comp = np.full(graph.n_nodes, -1, dtype=np.int64)
    c = 0
    for s in range(graph.n_nodes):
        if comp[s] != -1:
            continue
        comp[s] = c
        frontier = np.array([s], dtype=np.int64)
        while frontier.size:
            neigh = cols[_gather_ranges(offsets, frontier)]
            neigh = np.unique(neigh[comp[neigh] == -1])
            comp[neigh] = c
            frontier = neigh
        c += 1
    return comp, c


def _sub_csr(graph: Graph, keep: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """CSR of the induced subgraph on ``keep`` (sorted node ids)."""
    relabel = np.full(graph.n_nodes, -1, dtype=np.int64)
    relabel[keep] = np.arange(keep.size, dtype=np.int64)
    idx = _gather_ranges(graph.row_offsets, keep)
    cols = relabel[graph.col_indices[idx]]
    lens = graph.row_offsets[keep + 1] - graph.row_offsets[keep]
    keep_edge = cols >= 0
    seg = np.repeat(np.arange(keep.size), lens)[keep_edge]
    offsets = np.zeros(keep.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(seg, minlength=keep.size), out=offsets[1:])
    return offsets, np.ascontiguousarray(cols[keep_edge])


def _lanczos_smallest(matvec_l, m: int, n_need: int, eig_tol: float,
                      max_rounds: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """n_need smallest eigenpairs of a symmetric operator with spectrum in
    [0,2], via Lanczos on B = 2I - L with full reorthogonalization.

    Converged Ritz pairs are accepted only as a contiguous descending-in-B
    prefix, then deflated; restarts pick up degenerate eigenspaces.
    """
    rng = np.random.default_rng(_LANCZOS_SEED)
    vals: list[float] = []
    vecs: list[np.ndarray] = []
    dim = min(m, max(2 * n_need + 30, 50))
    for _ in range(max_rounds):
        if len(vals) >= n_need:
            break
        V = np.array(vecs) if vecs else np.empty((0, m))
        q = rng.standard_normal(m)
        if len(vecs):
            q -= V.T @ (V @ q)
        norm_q = np.linalg.norm(q)
        if norm_q < 1e-12:
            continue
        q /= norm_q
        budget = min(dim, m - len(vecs))
        Q = np.empty((budget, m))
        alpha = np.empty(budget)
        beta = np.zeros(budget)
        Q[0] = q
        built = 0
        for j in range(budget):
            w = 2.0 * Q[j] - matvec_l(Q[j])
            alpha[j] = Q[j] @ w
            w -= alpha[j] * Q[j]
            if j > 0:
                w -= beta[j - 1] * Q[j - 1]
            for _ in range(2):
                w -= Q[:j + 1].T @ (Q[:j + 1] @ w)
                if len(vecs):
                    w -= V.T @ (V @ w)
            built = j + 1
            if built == budget:
                break
            b = np.linalg.norm(w)
            if b < 1e-13:  # invariant subspace exhausted
                break
            beta[j] = b
            Q[j + 1] = w / b
        T = np.diag(alpha[:built])
        if built > 1:
            off = np.diag(beta[:built - 1], 1)
            T = T + off + off.T
        tvals, tvecs = np.linalg.eigh(T)
        for idx in np.argsort(-tvals):
            y = Q[:built].T @ tvecs[:, idx]
            norm_y = np.linalg.norm(y)
            if norm_y < 0.5:
                break
            y /= norm_y
            lam = 2.0 - tvals[idx]
            if np.linalg.norm(matvec_l(y) - lam * y) >= eig_tol:
                break  # keep only the converged prefix
            vals.append(lam)
            vecs.append(y)
            if len(vals) >= n_need:
                break
        dim = min(m, dim * 2)
    if len(vals) < n_need:
        raise ConvergenceError(
            f"Lanczos found {len(vals)} of {n_need} requested eigenpairs")
    order = np.argsort(vals[:n_need])
    vals_arr = np.array(vals[:n_need])[order]
    vecs_arr = np.array(vecs[:n_need]).T[:, order]
    return vals_arr, vecs_arr


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    for j in range(vecs.shape[1]):
        lead = np.argmax(np.abs(vecs[:, j]))  # first index on ties
        if vecs[lead, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def laplacian_eigenvectors(graph: Graph, cfg: StructuralConfig | None = None,
                           *, return_eigenvalues: bool = False,
                           dense_cutoff: int = _DENSE_EIG_CUTOFF):
    """Eigenvectors of the K smallest nontrivial eigenvalues of the symmetric
    normalized Laplacian L = I - D^{-1/2} A D^{-1/2}.

    One zero-eigenpair per connected component (the component-indicator
    space) is excluded. Columns are sign-fixed so the maximum-magnitude entry
    is positive (ties broken by lowest index). Degree-zero nodes get zero
    rows; the Laplacian is computed on the non-isolated subgraph.
    """
    cfg = cfg or StructuralConfig()
    k = cfg.n_eigenvectors
    n = graph.n_nodes
    if k >= n:
        raise InputDataError(f"n_eigenvectors={k} must be smaller than n_nodes={n}")
    if k == 0:
        empty = np.zeros((n, 0))
        return (empty, np.zeros(0)) if return_eigenvalues else empty

    deg = degrees(graph)
    keep = np.flatnonzero(deg > 0.0)
    m = keep.size
    offsets, cols = _sub_csr(graph, keep)
    sub = Graph(m, offsets, cols) if m else None
    n_comp = component_labels(sub)[1] if sub is not None else 0
    available = m - n_comp
    if available < k:
        raise InputDataError(
            f"graph has only {available} nontrivial eigenpair(s) "
            f"({m} non-isolated nodes in {n_comp} component(s)), need {k}")

    inv_sqrt = 1.0 / np.sqrt(deg[keep])
    if m <= dense_cutoff:
        adj = np.zeros((m, m))
        src = np.repeat(np.arange(m), np.diff(offsets))
        adj[src, cols] = 1.0
        lap = np.eye(m) - (inv_sqrt[:, None] * adj) * inv_sqrt[None, :]
        all_vals, all_vecs = np.linalg.eigh(lap)
        vals = all_vals[n_comp:n_comp + k]
        vecs = all_vecs[:, n_comp:n_comp + k]
    else:
        def matvec_l(x):
            return x - inv_sqrt * csr_matvec(offsets, cols, inv_sqrt * x)

        vals, vecs = _lanczos_smallest(matvec_l, m, k + n_comp, cfg.eig_tol)
        nontrivial = vals > _ZERO_EIG_THRESHOLD
        vals, vecs = vals[nontrivial][:k], vecs[:, nontrivial][:, :k]
        if vals.shape[0] < k:
            raise ConvergenceError(
                f"Lanczos resolved {vals.shape[0]} nontrivial eigenpair(s), need {k}")

    out = np.zeros((n, k))
    out[keep] = vecs
    out = _sign_fix(out)

    # per-column residual guard against the operator actually used
    def op(x):
        return x - inv_sqrt * csr_matvec(offsets, cols, inv_sqrt * x)

    for j in range(k):
        r = np.linalg.norm(op(out[keep, j]) - vals[j] * out[keep, j])
        if r >= cfg.eig_tol:
            raise NumericError(
                f"eigenpair {j} residual {r:.3e} exceeds eig_tol {cfg.eig_tol:.1e}")

    return (out, vals) if return_eigenvalues else out


def structural_features(graph: Graph,
                        cfg: StructuralConfig | None = None) -> StructuralFeatures:
    """Degree, PageRank, and Laplacian-eigenvector columns as one block."""
    cfg = cfg or StructuralConfig()
    return StructuralFeatures(
        degree=degrees(graph),
        pagerank=pagerank(graph, cfg),
        lap_eigs=laplacian_eigenvectors(graph, cfg),
    )
