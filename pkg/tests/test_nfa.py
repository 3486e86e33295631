import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphtab import (
    CATEGORICAL,
    NUMERICAL,
    Column,
    FeatureTable,
    InputDataError,
    build_graph,
    compute_nfa,
    nfa_categorical,
    nfa_numerical,
)
from helpers import nfa_oracle, random_edges, random_feature_table, random_graph

PATH4 = [(0, 1), (1, 2), (2, 3)]


def test_numerical_hand_example():
    graph, _ = build_graph(4, PATH4)
    vals = np.array([10.0, 20.0, np.nan, 40.0])
    out = nfa_numerical(graph, vals)
    # node 0 sees {20}; node 1 sees {10, nan}->{10}; node 2 sees {20, 40}
    assert out[0].tolist() == [20.0, 20.0, 20.0]
    assert out[1].tolist() == [10.0, 10.0, 10.0]
    assert out[2].tolist() == [30.0, 40.0, 20.0]
    assert out[3].tolist() == [np.nan] * 3 or np.all(np.isnan(out[3]))


def test_numerical_isolated_and_all_missing_rows_are_nan():
    graph, _ = build_graph(3, [(0, 1)])
    out = nfa_numerical(graph, np.array([np.nan, 1.0, 5.0]))
    assert np.isnan(out[1]).all()  # only neighbor's value is missing
    assert np.isnan(out[2]).all()  # isolated
    assert out[0].tolist() == [1.0, 1.0, 1.0]


def test_categorical_hand_example():
    graph, _ = build_graph(4, PATH4)
    codes = np.array([0, -1, 0, -1])
    out = nfa_categorical(graph, codes, 2)
    assert np.isnan(out[0]).all()  # sole neighbor's code is missing
    assert out[1].tolist() == [1.0, 0.0]
    assert np.isnan(out[2]).all()  # both neighbors missing
    assert out[3].tolist() == [1.0, 0.0]


def test_validation():
    graph, _ = build_graph(3, [(0, 1)])
    with pytest.raises(InputDataError, match="n_nodes"):
        nfa_numerical(graph, np.zeros(4))
    with pytest.raises(InputDataError, match="category"):
        nfa_categorical(graph, np.zeros(3, dtype=np.int64), 0)
    with pytest.raises(InputDataError, match="n_nodes"):
        compute_nfa(graph, FeatureTable(4, (Column("x", NUMERICAL, np.zeros(4)),)))


@pytest.mark.parametrize("seed", range(6))
def test_matches_bruteforce_oracle_bitwise(seed):
    n = 30
    graph, edges = random_graph(n, 0.15, seed)
    rng = np.random.default_rng(seed + 100)
    features = random_feature_table(n, rng, n_numerical=2, n_categorical=2,
                                    missing_rate=0.2)
    table = compute_nfa(graph, features)
    want = nfa_oracle(n, edges, features)
    assert table.values.shape == want.shape
    assert np.array_equal(table.values, want, equal_nan=True)


def test_provenance_and_names():
    n = 5
    features = FeatureTable(n, (
        Column("age", NUMERICAL, np.arange(n, dtype=float)),
        Column("color", CATEGORICAL, np.zeros(n, dtype=np.int64), ("r", "g")),
    ))
    graph, _ = build_graph(n, [(i, (i + 1) % n) for i in range(n)])
    table = compute_nfa(graph, features)
    assert table.provenance == (
        ("age", "mean"), ("age", "max"), ("age", "min"),
        ("color", "cat_freq:r"), ("color", "cat_freq:g"))
    assert table.names() == ["age.mean", "age.max", "age.min",
                             "color.cat_freq:r", "color.cat_freq:g"]
    assert table.width == 5


def test_empty_feature_table():
    graph, _ = build_graph(3, [(0, 1)])
    table = compute_nfa(graph, FeatureTable(3, ()))
    assert table.values.shape == (3, 0)
    assert table.names() == []


def test_node_permutation_is_bitwise():
    n = 25
    graph, edges = random_graph(n, 0.2, seed=1)
    rng = np.random.default_rng(7)
    features = random_feature_table(n, rng, missing_rate=0.15)
    base = compute_nfa(graph, features).values
    for _ in range(3):
        perm = rng.permutation(n)
        pgraph, _ = build_graph(n, perm[np.asarray(edges)])
        pcols = []
        for col in features.columns:
            pvals = np.empty_like(col.values)
            pvals[perm] = col.values
            pcols.append(Column(col.name, col.kind, pvals, col.categories))
        ptable = compute_nfa(pgraph, FeatureTable(n, tuple(pcols)))
        assert np.array_equal(ptable.values[perm], base, equal_nan=True)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000),
       p=st.floats(min_value=0.0, max_value=0.5))
def test_oracle_property(seed, p):
    n = 12
    rng = np.random.default_rng(seed)
    edges = random_edges(n, p, rng)
    graph, _ = build_graph(n, edges)
    features = random_feature_table(n, rng, n_numerical=1, n_categorical=1,
                                    missing_rate=0.3)
    got = compute_nfa(graph, features).values
    want = nfa_oracle(n, edges, features)
    assert np.array_equal(got, want, equal_nan=True)
