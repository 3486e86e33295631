import json

import numpy as np
import pytest

from graphtab import (
    CATEGORICAL,
    NUMERICAL,
    AssembleOptions,
    AugmentedTable,
    Column,
    InputDataError,
    NfaTable,
    NumericError,
    PearlConfig,
    Split,
    StructuralConfig,
    assemble_features,
    compute_nfa,
    load_table,
    one_hot,
    pca_fit,
    pca_transform,
    pearl_encode,
    save_table,
    structural_features,
)
from helpers import random_dataset


def pca_oracle(x, k):
    """SVD-based PCA with the same sign convention."""
    mean = x.mean(axis=0)
    u, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    comps = vt[:k].T.copy()
    for j in range(k):
        lead = np.argmax(np.abs(comps[:, j]))
        if comps[lead, j] < 0:
            comps[:, j] = -comps[:, j]
    return mean, comps, (s[:k] ** 2) / (x.shape[0] - 1)


def default_split(n):
    third = n // 3
    return Split(np.arange(third), np.arange(third, 2 * third),
                 np.arange(2 * third, n), seed=0)


class TestOneHot:
    def test_hand_example(self):
        col = Column("color", CATEGORICAL, np.array([0, 2, -1, 1]),
                     ("r", "g", "b"))
        mat, names = one_hot(col)
        assert names == ["color=r", "color=g", "color=b"]
        assert mat[0].tolist() == [1.0, 0.0, 0.0]
        assert mat[1].tolist() == [0.0, 0.0, 1.0]
        assert np.isnan(mat[2]).all()
        assert mat[3].tolist() == [0.0, 1.0, 0.0]

    def test_rejects_numerical(self):
        with pytest.raises(InputDataError):
            one_hot(Column("x", NUMERICAL, np.zeros(3)))


class TestPca:
    def test_matches_svd_oracle(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((40, 7)) @ rng.standard_normal((7, 7))
        model = pca_fit(x, 4)
        mean, comps, ev = pca_oracle(x, 4)
        assert np.allclose(model.mean, mean, atol=1e-12)
        assert np.allclose(model.components, comps, atol=1e-9)
        assert np.allclose(model.explained_variance, ev, atol=1e-9)

    def test_transform_whitens_train_covariance(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((60, 5)) * np.array([3.0, 2.0, 1.0, 0.5, 0.1])
        model = pca_fit(x, 3)
        z = pca_transform(model, x)
        cov = z.T @ z / (len(x) - 1)
        assert np.allclose(cov, np.diag(model.explained_variance), atol=1e-9)

    def test_nan_handling(self):
        x = np.array([[1.0, np.nan], [3.0, 4.0], [5.0, 8.0], [7.0, 6.0]])
        model = pca_fit(x, 1)
        # the NaN cell is imputed with the column mean of the finite cells
        assert np.isfinite(model.mean).all()
        z = pca_transform(model, np.array([[np.nan, np.nan]]))
        assert np.allclose(z, 0.0, atol=1e-12)  # imputed row sits at the mean

    def test_all_nan_column_is_treated_as_zero(self):
        x = np.column_stack([np.full(5, np.nan), np.arange(5.0)])
        model = pca_fit(x, 1)
        assert model.mean[0] == 0.0

    def test_errors(self):
        with pytest.raises(InputDataError, match="2 rows"):
            pca_fit(np.zeros((1, 3)), 1)
        with pytest.raises(InputDataError, match="d_keep"):
            pca_fit(np.zeros((5, 3)), 4)
        with pytest.raises(InputDataError, match="d_keep"):
            pca_fit(np.random.default_rng(0).standard_normal((5, 3)), 0)
        with pytest.raises(NumericError, match="zero variance"):
            pca_fit(np.ones((5, 3)), 2)
        model = pca_fit(np.random.default_rng(0).standard_normal((6, 3)), 2)
        with pytest.raises(InputDataError, match="columns"):
            pca_transform(model, np.zeros((2, 5)))

    def test_deterministic(self):
        x = np.random.default_rng(2).standard_normal((30, 6))
        a, b = pca_fit(x, 3), pca_fit(x, 3)
        assert np.array_equal(a.components, b.components)


class TestAssemble:
    def make_blocks(self, n=30, seed=0):
        ds = random_dataset(n, 0.2, seed=seed, missing_rate=0.1)
        nfa = compute_nfa(ds.graph, ds.features)
        sf = structural_features(ds.graph, StructuralConfig(n_eigenvectors=2))
        enc = pearl_encode(ds.graph, PearlConfig(m_draws=2, d_in=4,
                                                 d_hidden=6, d_out=3))
        return ds, nfa, sf, enc

    def test_block_order_and_names(self):
        ds, nfa, sf, enc = self.make_blocks()
        split = default_split(30)
        table = assemble_features(ds, nfa, sf, enc, split)
        order = [table.blocks[0]]
        for b in table.blocks:
            if b != order[-1]:
                order.append(b)
        assert order == ["orig", "nfa", "sf", "pearl"]
        w_orig = 2 + 1 * len(ds.features.column("cat_0").categories)
        assert table.block_columns("orig").shape == (30, w_orig)
        assert table.block_columns("nfa").shape == (30, nfa.width)
        assert table.block_columns("sf").shape == (30, 4)
        assert table.block_columns("pearl").shape == (30, 3)
        assert table.names[:2] == ("num_0", "num_1")
        assert "pearl_1" in table.names and "degree" in table.names

    def test_none_blocks_are_left_out(self):
        ds, nfa, sf, enc = self.make_blocks()
        split = default_split(30)
        table = assemble_features(ds, None, None, None, split)
        assert set(table.blocks) == {"orig"}
        table = assemble_features(ds, nfa, None, enc, split)
        assert set(table.blocks) == {"orig", "nfa", "pearl"}

    def test_pca_triggers_only_beyond_threshold(self):
        ds, nfa, sf, enc = self.make_blocks()
        split = default_split(30)
        opts = AssembleOptions(pca_threshold=4, pca_dims=3)
        table = assemble_features(ds, nfa, sf, enc, split, opts)
        # orig (5 cols) and nfa (> 4 cols) are reduced to 3 PCs each
        assert table.block_columns("orig").shape == (30, 3)
        assert table.block_columns("nfa").shape == (30, 3)
        # sf and pearl are never reduced
        assert table.block_columns("sf").shape == (30, 4)
        assert table.block_columns("pearl").shape == (30, 3)
        assert [m.block for m in table.pca_models] == ["orig", "nfa"]
        names = [n for n, b in zip(table.names, table.blocks) if b == "orig"]
        assert names == ["pc_1", "pc_2", "pc_3"]

    def test_pca_dims_capped_by_train_size(self):
        ds, nfa, sf, enc = self.make_blocks()
        split = Split(np.arange(2), np.arange(2, 16), np.arange(16, 30), seed=0)
        opts = AssembleOptions(pca_threshold=4, pca_dims=10)
        table = assemble_features(ds, nfa, None, None, split, opts)
        assert table.block_columns("nfa").shape == (30, 2)

    def test_pca_fits_on_train_rows_only(self):
        ds, nfa, sf, enc = self.make_blocks()
        split = default_split(30)
        opts = AssembleOptions(pca_threshold=4, pca_dims=3)
        base = assemble_features(ds, nfa, None, None, split, opts)

        # corrupt the nfa values on test rows only; train output must not move
        tampered = nfa.values.copy()
        tampered[split.test] += 100.0
        nfa2 = NfaTable(nfa.n_rows, tampered, nfa.provenance)
        other = assemble_features(ds, nfa2, None, None, split, opts)

        nfa_cols = base.block_columns("nfa")
        nfa_cols2 = other.block_columns("nfa")
        assert np.array_equal(nfa_cols[split.train], nfa_cols2[split.train],
                              equal_nan=True)
        assert not np.allclose(nfa_cols[split.test], nfa_cols2[split.test],
                               equal_nan=True)
        for m_a, m_b in zip(base.pca_models, other.pca_models):
            assert np.array_equal(m_a.mean, m_b.mean)
            assert np.array_equal(m_a.components, m_b.components)

    def test_missing_values_survive_outside_pca(self):
        ds, nfa, sf, enc = self.make_blocks()
        table = assemble_features(ds, nfa, None, None, default_split(30))
        assert np.isnan(table.block_columns("orig")).any()

    def test_row_mismatch_rejected(self):
        ds, nfa, sf, enc = self.make_blocks()
        with pytest.raises(InputDataError, match="rows"):
            assemble_features(ds, None, None, np.zeros((29, 3)), default_split(30))

    def test_deterministic(self):
        ds, nfa, sf, enc = self.make_blocks()
        split = default_split(30)
        a = assemble_features(ds, nfa, sf, enc, split)
        b = assemble_features(ds, nfa, sf, enc, split)
        assert np.array_equal(a.matrix, b.matrix, equal_nan=True)


class TestPersistence:
    def test_round_trip_is_bitwise(self, tmp_path):
        ds = random_dataset(20, 0.2, seed=3, missing_rate=0.15)
        nfa = compute_nfa(ds.graph, ds.features)
        table = assemble_features(ds, nfa, None, None, default_split(20))
        csv_path, meta_path = tmp_path / "aug.csv", tmp_path / "aug.meta.json"
        save_table(table, csv_path, meta_path, AssembleOptions(),
                   seeds={"split": 0})
        back = load_table(csv_path)
        assert back.blocks == table.blocks
        assert back.names == table.names
        assert np.array_equal(back.matrix, table.matrix, equal_nan=True)

        meta = json.loads(meta_path.read_text())
        assert meta["blocks"]["orig"] == table.block_columns("orig").shape[1]
        assert meta["seeds"] == {"split": 0}
        assert meta["pca"]["threshold"] == 128

    def test_meta_records_pca_models(self, tmp_path):
        ds = random_dataset(24, 0.2, seed=4)
        nfa = compute_nfa(ds.graph, ds.features)
        opts = AssembleOptions(pca_threshold=4, pca_dims=2)
        table = assemble_features(ds, nfa, None, None, default_split(24), opts)
        save_table(table, tmp_path / "a.csv", tmp_path / "a.json", opts)
        meta = json.loads((tmp_path / "a.json").read_text())
        assert [m["block"] for m in meta["pca"]["models"]] == ["orig", "nfa"]
        assert all(m["d_keep"] == 2 for m in meta["pca"]["models"])

    def test_load_rejects_bad_headers_and_ragged_rows(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("unblocked\n1.0\n")
        with pytest.raises(InputDataError, match="header"):
            load_table(p)
        p.write_text("mystery.x\n1.0\n")
        with pytest.raises(InputDataError, match="header"):
            load_table(p)
        p.write_text("orig.x,orig.y\n1.0\n")
        with pytest.raises(InputDataError, match="expected 2"):
            load_table(p)
        p.write_text("")
        with pytest.raises(InputDataError, match="empty"):
            load_table(p)

    def test_table_metadata_validation(self):
        with pytest.raises(InputDataError, match="metadata"):
            AugmentedTable(np.zeros((3, 2)), ("orig",), ("a", "b"))
