"""Executable symmetry checks: node, feature, and label permutations.

Each check transforms a dataset, reruns a fixed pipeline recipe, and compares
against the transformed original output at the tolerance each contract
states. Failures become report entries, not exceptions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .assemble import AssembleOptions, assemble_features
from .data import Column, Dataset, FeatureTable, TaskSpec, build_graph, make_split
from .errors import InputDataError
from .metrics import evaluate
from .nfa import compute_nfa
from .pearl import PearlConfig, gnn_forward, init_weights, pearl_encode
from .predictors import PredictRequest, knn_predict, label_shuffle_wrap, linear_train_predict
from .structural import (
    StructuralConfig,
    degrees,
    laplacian_eigenvectors,
    pagerank,
    structural_features,
)

EXACT = 0.0
TOL_LAPLACIAN = 1e-6
TOL_GNN = 1e-5
TOL_METRIC = 1e-6
TOL_LABEL = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    max_deviation: float
    passed: bool


@dataclass(frozen=True)
class Report:
    title: str
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        width = max((len(c.name) for c in self.checks), default=10)
        lines = [f"== {self.title} =="]
        for c in self.checks:
            lines.append(
                f"{c.name:<{width}}  tol={c.tolerance:<8.1e}  "
                f"max_dev={c.max_deviation:.3e}  {'PASS' if c.passed else 'FAIL'}")
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _exact_dev(a: np.ndarray, b: np.ndarray) -> float:
    """0.0 on bitwise equality (NaNs matching positionally), else the actual
    deviation (inf when NaN patterns disagree)."""
    if np.array_equal(a, b, equal_nan=True):
        return 0.0
    if not np.array_equal(np.isnan(a), np.isnan(b)):
        return float("inf")
    diff = np.abs(a - b)
    return float(np.nanmax(diff)) if diff.size else float("inf")


def _check(name: str, tol: float, dev: float) -> CheckResult:
    return CheckResult(name, tol, dev, dev <= tol)


def permute_nodes(dataset: Dataset, perm: np.ndarray) -> Dataset:
    """Relabel node i as perm[i] everywhere."""
    perm = np.asarray(perm, dtype=np.int64)
    g = dataset.graph
    src = np.repeat(np.arange(g.n_nodes, dtype=np.int64), np.diff(g.row_offsets))
    edges = np.column_stack([perm[src], perm[g.col_indices]])
    graph, _ = build_graph(g.n_nodes, edges)
    inv = np.argsort(perm)
    cols = tuple(
        Column(c.name, c.kind, c.values[inv], c.categories)
        for c in dataset.features.columns)
    task = TaskSpec(dataset.task.task_kind, dataset.task.targets[inv],
                    dataset.task.n_classes)
    return Dataset(graph, FeatureTable(dataset.features.n_rows, cols), task)


def _permute_rows(mat: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.empty_like(mat)
    out[perm] = mat
    return out


def check_node_permutation(dataset: Dataset, seed: int = 0,
                           n_perms: int = 20) -> Report:
    """degrees/pagerank/NFA must commute bitwise; the Laplacian block as a
    projector within 1e-6; gnn_forward within 1e-5."""
    g = dataset.graph
    n = g.n_nodes
    scfg = StructuralConfig(n_eigenvectors=min(4, max(1, n - 2)))
    pcfg = PearlConfig(m_draws=1, d_in=8, d_hidden=16, d_out=8, draw_seed=seed)
    weights = init_weights(pcfg)
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, pcfg.d_in))

    base_deg = degrees(g)
    base_pr = pagerank(g, scfg)
    base_nfa = compute_nfa(g, dataset.features).values
    base_lap = laplacian_eigenvectors(g, scfg)
    base_gnn = gnn_forward(g, feats, weights)
    base_proj = base_lap @ base_lap.T

    devs = {"degrees": 0.0, "pagerank": 0.0, "nfa": 0.0,
            "laplacian_projector": 0.0, "gnn_forward": 0.0}
    perms = [np.arange(n)] + [rng.permutation(n) for _ in range(n_perms - 1)]
    for perm in perms:
        pd = permute_nodes(dataset, perm)
        inv = np.argsort(perm)
        devs["degrees"] = max(devs["degrees"],
                              _exact_dev(degrees(pd.graph),
                                         _permute_rows(base_deg, perm)))
        devs["pagerank"] = max(devs["pagerank"],
                               _exact_dev(pagerank(pd.graph, scfg),
                                          _permute_rows(base_pr, perm)))
        devs["nfa"] = max(devs["nfa"],
                          _exact_dev(compute_nfa(pd.graph, pd.features).values,
                                     _permute_rows(base_nfa, perm)))
        lap_p = laplacian_eigenvectors(pd.graph, scfg)
        proj_expected = base_proj[np.ix_(inv, inv)]
        devs["laplacian_projector"] = max(
            devs["laplacian_projector"],
            float(np.linalg.norm(lap_p @ lap_p.T - proj_expected)))
        out_p = gnn_forward(pd.graph, _permute_rows(feats, perm), weights)
        devs["gnn_forward"] = max(
            devs["gnn_forward"],
            float(np.abs(out_p - _permute_rows(base_gnn, perm)).max()))

    checks = (
        _check("degrees", EXACT, devs["degrees"]),
        _check("pagerank", EXACT, devs["pagerank"]),
        _check("nfa", EXACT, devs["nfa"]),
        _check("laplacian_projector", TOL_LAPLACIAN, devs["laplacian_projector"]),
        _check("gnn_forward", TOL_GNN, devs["gnn_forward"]),
    )
    return Report(f"node permutation ({len(perms)} permutations, n={n})", checks)


def _pipeline_metric(dataset: Dataset, seed: int) -> float:
    """Fixed recipe: full augmented table, k-NN, task metric on test."""
    split = make_split(dataset, (0.4, 0.2, 0.4), stratified=False, seed=seed)
    g = dataset.graph
    scfg = StructuralConfig(n_eigenvectors=min(4, max(1, g.n_nodes - 2)))
    pcfg = PearlConfig(m_draws=2, d_in=8, d_hidden=16, d_out=8, draw_seed=seed)
    try:
        sf = structural_features(g, scfg)
    except InputDataError:  # too fragmented for K eigenpairs
        sf = None
    table = assemble_features(
        dataset, compute_nfa(g, dataset.features), sf,
        pearl_encode(g, pcfg), split, AssembleOptions())
    y = dataset.task.targets
    req = PredictRequest(table.matrix[split.train], y[split.train],
                         table.matrix[split.test], dataset.task.task_kind,
                         dataset.task.n_classes)
    pred = knn_predict(req, k=min(5, split.train.size))
    out = pred.probs if dataset.task.is_classification else pred.values
    return evaluate(dataset.task.task_kind, out, y[split.test]).value


def check_feature_permutation(dataset: Dataset, seed: int = 0) -> Report:
    """Permuting input feature columns must permute NFA output groups exactly
    and leave the end-to-end metric unchanged within 1e-6."""
    rng = np.random.default_rng(seed)
    n_cols = len(dataset.features.columns)
    base_nfa = compute_nfa(dataset.graph, dataset.features)

    group_dev = 0.0
    metric_dev = 0.0
    base_metric = _pipeline_metric(dataset, seed)
    perms = [np.arange(n_cols), rng.permutation(n_cols), np.arange(n_cols)[::-1]]
    for perm in perms:
        cols = tuple(dataset.features.columns[i] for i in perm)
        permuted = Dataset(dataset.graph,
                           FeatureTable(dataset.features.n_rows, cols), dataset.task)
        perm_nfa = compute_nfa(permuted.graph, permuted.features)
        # reassemble the permuted groups in original column order
        by_source: dict[str, list[int]] = {}
        for j, (src, _) in enumerate(perm_nfa.provenance):
            by_source.setdefault(src, []).append(j)
        gathered = np.concatenate(
            [perm_nfa.values[:, by_source[c.name]] for c in dataset.features.columns],
            axis=1) if n_cols else perm_nfa.values
        group_dev = max(group_dev, _exact_dev(gathered, base_nfa.values))
        metric_dev = max(metric_dev,
                         abs(_pipeline_metric(permuted, seed) - base_metric))

    checks = (
        _check("nfa_groups", EXACT, group_dev),
        _check("end_to_end_metric", TOL_METRIC, metric_dev),
    )
    return Report(f"feature permutation ({len(perms)} permutations)", checks)


def check_label_permutation(dataset: Dataset, seed: int = 0) -> Report:
    """Exhaustive label-shuffle equivariance for both built-in predictors:
    wrap(sigma . req) = sigma . wrap(req) within 1e-6 for every bijection."""
    task = dataset.task
    if not task.is_classification:
        raise InputDataError("label permutation check needs a classification task")
    if task.n_classes > 4:
        raise InputDataError("exhaustive mode supports n_classes <= 4")

    split = make_split(dataset, (0.5, 0.2, 0.3), stratified=True, seed=seed)
    table = assemble_features(dataset, compute_nfa(dataset.graph, dataset.features),
                              None, None, split, AssembleOptions())
    y = task.targets
    req = PredictRequest(table.matrix[split.train], y[split.train],
                         table.matrix[split.test], task.task_kind, task.n_classes)
    inners = {
        "knn": lambda r: knn_predict(r, k=min(5, split.train.size)),
        "linear": lambda r: linear_train_predict(r, epochs=150),
    }
    checks = []
    for name, inner in inners.items():
        base = label_shuffle_wrap(inner, req, n_shuffles=10_000, seed=seed).probs
        dev = 0.0
        for sigma in itertools.permutations(range(task.n_classes)):
            sig = np.array(sigma, dtype=np.int64)
            relabeled = PredictRequest(req.train_x, sig[req.train_y], req.test_x,
                                       req.task_kind, req.n_classes)
            wrapped = label_shuffle_wrap(inner, relabeled, n_shuffles=10_000,
                                         seed=seed).probs
            expected = np.empty_like(base)
            expected[:, sig] = base
            dev = max(dev, float(np.abs(wrapped - expected).max()))
        checks.append(_check(f"label_shuffle_{name}", TOL_LABEL, dev))
    return Report(f"label permutation (exhaustive, {task.n_classes} classes)",
                  tuple(checks))
