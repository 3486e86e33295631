"""Neighborhood feature aggregation.

For every node, statistics of its neighbors' features: (mean, max, min) per
numerical column, per-category frequencies per categorical column. Missing
neighbor entries are skipped; a node with no usable neighbors gets NaN in the
whole output group. The mean goes through the value-sorted halving-tree
kernel, so results are bitwise node-permutation equivariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, NUMERICAL, FeatureTable, Graph
from .errors import InputDataError
from .kernels import seg_cat_counts, seg_stats_skipna

NUMERICAL_STATS = ("mean", "max", "min")


@dataclass(frozen=True)
class NfaTable:
    """Aggregated columns plus, per column, where it came from:
    (source column name, statistic), statistic in {mean, max, min,
    cat_freq:<category>}."""

    n_rows: int
    values: np.ndarray
    provenance: tuple[tuple[str, str], ...]

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (self.n_rows, len(self.provenance)):
            raise InputDataError("NFA value shape does not match provenance")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "provenance", tuple(map(tuple, self.provenance)))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def names(self) -> list[str]:
        return [f"{src}.{stat}" for src, stat in self.provenance]


def nfa_numerical(graph: Graph, values: np.ndarray) -> np.ndarray:
    """(mean, max, min) of neighbor values, NaN entries skipped; nodes with
    no non-missing neighbor get NaN in all three columns."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.shape != (graph.n_nodes,):
        raise InputDataError("column length must equal n_nodes")
    mean, vmax, vmin, _ = seg_stats_skipna(values[graph.col_indices], graph.row_offsets)
    return np.column_stack([mean, vmax, vmin])


def nfa_categorical(graph: Graph, codes: np.ndarray, n_categories: int) -> np.ndarray:
    """Per-category neighbor frequencies with the non-missing neighbor count
    as denominator; isolated/all-missing nodes get a NaN row."""
    if n_categories < 1:
        raise InputDataError("vocabulary must have at least one category")
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if codes.shape != (graph.n_nodes,):
        raise InputDataError("column length must equal n_nodes")
    counts, valid = seg_cat_counts(codes[graph.col_indices], graph.row_offsets,
                                   n_categories)
    out = np.full_like(counts, np.nan)
    ok = valid > 0
    out[ok] = counts[ok] / valid[ok, None]
    return out


def compute_nfa(graph: Graph, features: FeatureTable) -> NfaTable:
    """Aggregate every feature column; output groups follow source column
    order, (mean, max, min) within numerical groups, vocabulary order within
    categorical groups."""
    if features.n_rows != graph.n_nodes:
        raise InputDataError("feature table row count != n_nodes")
    blocks = []
    provenance: list[tuple[str, str]] = []
    for col in features.columns:
        if col.kind == NUMERICAL:
            blocks.append(nfa_numerical(graph, col.values))
            provenance.extend((col.name, stat) for stat in NUMERICAL_STATS)
        else:
            blocks.append(nfa_categorical(graph, col.values, len(col.categories)))
            provenance.extend((col.name, f"cat_freq:{cat}") for cat in col.categories)
    values = (np.concatenate(blocks, axis=1) if blocks
              else np.zeros((graph.n_nodes, 0)))
    return NfaTable(graph.n_nodes, values, tuple(provenance))
