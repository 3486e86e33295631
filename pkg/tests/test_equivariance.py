import numpy as np
import pytest

from graphtab import (
    CheckResult,
    Dataset,
    InputDataError,
    Report,
    build_graph,
    check_feature_permutation,
    check_label_permutation,
    check_node_permutation,
    permute_nodes,
)
from graphtab.equivariance import _exact_dev
from helpers import random_dataset, random_edges


class TestPrimitives:
    def test_exact_dev(self):
        a = np.array([1.0, np.nan, 3.0])
        assert _exact_dev(a, a.copy()) == 0.0
        assert _exact_dev(a, np.array([1.0, 2.0, 3.0])) == np.inf
        assert _exact_dev(np.array([1.0, 2.0]), np.array([1.0, 2.5])) == 0.5

    def test_permute_nodes_moves_everything_together(self):
        ds = random_dataset(10, 0.3, seed=0, missing_rate=0.2)
        perm = np.random.default_rng(1).permutation(10)
        pds = permute_nodes(ds, perm)
        # edge (u, v) in the original appears as (perm[u], perm[v])
        orig = {tuple(sorted((u, v))) for u, v in ds.graph.edge_list()}
        moved = {tuple(sorted((perm[u], perm[v]))) for u, v in orig}
        got = {tuple(e) for e in pds.graph.edge_list().tolist()}
        assert got == moved
        # node i's feature row and target travel to row perm[i]
        for col, pcol in zip(ds.features.columns, pds.features.columns):
            assert np.array_equal(pcol.values[perm], col.values, equal_nan=True)
        assert np.array_equal(pds.task.targets[perm], ds.task.targets)

    def test_report_rendering(self):
        report = Report("demo", (
            CheckResult("alpha", 0.0, 0.0, True),
            CheckResult("beta", 1e-6, 0.5, False),
        ))
        text = report.render()
        assert "== demo ==" in text
        assert "alpha" in text and "PASS" in text
        assert "beta" in text and "FAIL" in text
        assert text.endswith("result: FAIL")
        assert not report.passed


class TestNodePermutation:
    def test_passes_on_random_dataset(self):
        ds = random_dataset(30, 0.15, seed=1, missing_rate=0.15)
        report = check_node_permutation(ds, seed=0, n_perms=10)
        assert report.passed, report.render()
        by_name = {c.name: c for c in report.checks}
        # the commuting trio is demanded bitwise, and achieves it
        for name in ("degrees", "pagerank", "nfa"):
            assert by_name[name].tolerance == 0.0
            assert by_name[name].max_deviation == 0.0
        assert by_name["laplacian_projector"].max_deviation <= 1e-6
        assert by_name["gnn_forward"].max_deviation <= 1e-5

    def test_passes_with_isolated_nodes(self):
        # connected core plus genuinely isolated nodes
        rng = np.random.default_rng(2)
        core = random_edges(21, 0.3, rng)
        graph, _ = build_graph(25, core)
        assert (graph.degrees() == 0).any()
        base = random_dataset(25, 0.0, seed=2, missing_rate=0.3)
        ds = Dataset(graph, base.features, base.task)
        report = check_node_permutation(ds, seed=3, n_perms=8)
        assert report.passed, report.render()

    def test_degenerate_spectrum_is_reported_not_hidden(self):
        # shattered graph: the eigenvalue at the K-cut is degenerate, so the
        # K-dim eigenspace is not permutation-stable; the harness must say so
        ds = random_dataset(25, 0.05, seed=2, missing_rate=0.3)
        report = check_node_permutation(ds, seed=3, n_perms=8)
        by_name = {c.name: c for c in report.checks}
        assert not by_name["laplacian_projector"].passed
        for name in ("degrees", "pagerank", "nfa"):
            assert by_name[name].max_deviation == 0.0
        assert not report.passed

    def test_passes_on_multiclass(self):
        ds = random_dataset(24, 0.2, seed=3, task_kind="multiclass", n_classes=3)
        report = check_node_permutation(ds, seed=1, n_perms=6)
        assert report.passed, report.render()


class TestFeaturePermutation:
    def test_passes_on_mixed_columns(self):
        ds = random_dataset(30, 0.15, seed=4, missing_rate=0.1,
                            n_numerical=3, n_categorical=2)
        report = check_feature_permutation(ds, seed=0)
        assert report.passed, report.render()
        by_name = {c.name: c for c in report.checks}
        assert by_name["nfa_groups"].max_deviation == 0.0
        assert by_name["end_to_end_metric"].max_deviation <= 1e-6

    def test_passes_on_regression(self):
        ds = random_dataset(30, 0.2, seed=5, task_kind="regression",
                            missing_rate=0.0)
        report = check_feature_permutation(ds, seed=0)
        assert report.passed, report.render()


class TestLabelPermutation:
    @pytest.mark.parametrize("task_kind,n_classes",
                             [("binary", 2), ("multiclass", 3)])
    def test_passes_exhaustively(self, task_kind, n_classes):
        ds = random_dataset(40, 0.15, seed=6, task_kind=task_kind,
                            n_classes=n_classes, missing_rate=0.0)
        report = check_label_permutation(ds, seed=0)
        assert report.passed, report.render()
        names = [c.name for c in report.checks]
        assert names == ["label_shuffle_knn", "label_shuffle_linear"]
        for c in report.checks:
            assert c.max_deviation <= 1e-6

    def test_rejects_regression_and_many_classes(self):
        reg = random_dataset(20, 0.2, seed=7, task_kind="regression")
        with pytest.raises(InputDataError, match="classification"):
            check_label_permutation(reg)
        many = random_dataset(60, 0.2, seed=8, task_kind="multiclass",
                              n_classes=5, missing_rate=0.0)
        with pytest.raises(InputDataError, match="<= 4"):
            check_label_permutation(many)
