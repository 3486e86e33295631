"""Feature assembly: concatenate blocks into the augmented table.

Block order is fixed as [orig | nfa | sf | pearl]. Original categorical
columns are one-hot encoded (vocabulary over all rows: transductive).
A block wider than ``pca_threshold`` is reduced to ``pca_dims`` principal
components fitted on the train rows only; that applies to the orig and nfa
blocks, never to sf or pearl. Outside PCA, missing values stay missing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import CATEGORICAL, Column, Dataset, Split
from .errors import InputDataError, NumericError
from .nfa import NfaTable
from .structural import StructuralFeatures

BLOCK_ORDER = ("orig", "nfa", "sf", "pearl")


@dataclass(frozen=True)
class AssembleOptions:
    pca_threshold: int = 128
    pca_dims: int = 64

    def __post_init__(self):
        if self.pca_threshold < 1 or self.pca_dims < 1:
            raise InputDataError("PCA threshold and dims must be positive")


@dataclass(frozen=True)
class PcaModel:
    block: str
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        comp = np.ascontiguousarray(self.components, dtype=np.float64)
        ev = np.ascontiguousarray(self.explained_variance, dtype=np.float64)
        if comp.shape != (mean.shape[0], ev.shape[0]):
            raise InputDataError("inconsistent PCA model shapes")
        for arr in (mean, comp, ev):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "explained_variance", ev)

    @property
    def d_keep(self) -> int:
        return self.components.shape[1]


def _impute_columns(rows: np.ndarray, mean: np.ndarray) -> np.ndarray:
    out = rows.copy()
    nan = np.isnan(out)
    if nan.any():
        out[nan] = np.broadcast_to(mean, out.shape)[nan]
    return out


def pca_fit(rows: np.ndarray, d_keep: int, block: str = "") -> PcaModel:
    """PCA of the train-row submatrix; NaNs are mean-imputed per column first.
    Components are the top eigenvectors of the sample covariance, each
    sign-fixed so its maximum-magnitude entry is positive."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InputDataError("PCA needs a 2-D matrix with at least 2 rows")
    n, d = rows.shape
    if not 1 <= d_keep <= min(n, d):
        raise InputDataError(f"d_keep must lie in [1, min(n_rows, width)]={min(n, d)}")
    col_mean = np.nanmean(np.where(np.isnan(rows).all(axis=0), 0.0, rows), axis=0)
    col_mean = np.where(np.isnan(col_mean), 0.0, col_mean)
    x = _impute_columns(rows, col_mean)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    if not np.any(np.diag(cov) > 0.0):
        raise NumericError("PCA input has zero variance in every column")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:d_keep]
    comp = eigvecs[:, order]
    for j in range(comp.shape[1]):
        lead = np.argmax(np.abs(comp[:, j]))
        if comp[lead, j] < 0:
            comp[:, j] = -comp[:, j]
    return PcaModel(block, mean, comp, np.maximum(eigvals[order], 0.0))


def pca_transform(model: PcaModel, rows: np.ndarray) -> np.ndarray:
    """(rows - mean) @ components, with NaNs imputed by the fitted mean."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.mean.shape[0]:
        raise InputDataError(
            f"expected {model.mean.shape[0]} columns, got {rows.shape}")
    return (_impute_columns(rows, model.mean) - model.mean) @ model.components


def one_hot(column: Column) -> tuple[np.ndarray, list[str]]:
    """V indicator columns; a missing code yields NaN across the group."""
    if column.kind != CATEGORICAL:
        raise InputDataError(f"one_hot needs a categorical column, got {column.kind}")
    n = column.values.shape[0]
    v = len(column.categories)
    out = np.zeros((n, v))
    present = column.values >= 0
    out[~present] = np.nan
    out[present, column.values[present]] = 1.0
    return out, [f"{column.name}={cat}" for cat in column.categories]


@dataclass(frozen=True)
class AugmentedTable:
    matrix: np.ndarray
    blocks: tuple[str, ...]
    names: tuple[str, ...]
    pca_models: tuple[PcaModel, ...] = field(default_factory=tuple)

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[1] != len(self.blocks) or \
                len(self.blocks) != len(self.names):
            raise InputDataError("augmented table metadata does not match matrix")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "pca_models", tuple(self.pca_models))

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    def block_columns(self, block: str) -> np.ndarray:
        return self.matrix[:, [i for i, b in enumerate(self.blocks) if b == block]]


def _orig_block(dataset: Dataset) -> tuple[np.ndarray, list[str]]:
    mats, names = [], []
    for col in dataset.features.columns:
        if col.kind == CATEGORICAL:
            oh, oh_names = one_hot(col)
            mats.append(oh)
            names.extend(oh_names)
        else:
            mats.append(col.values[:, None])
            names.append(col.name)
    n = dataset.features.n_rows
    return (np.concatenate(mats, axis=1) if mats else np.zeros((n, 0))), names


def assemble_features(dataset: Dataset, nfa: NfaTable | None,
                      sf: StructuralFeatures | None, pearl: np.ndarray | None,
                      split: Split, opts: AssembleOptions | None = None) -> AugmentedTable:
    """Concatenate the orig block with whichever feature blocks are given
    (pass None to leave one out, reproducing the ablation variants)."""
    opts = opts or AssembleOptions()
    n = dataset.graph.n_nodes
    split.check_range(n)

    candidates: list[tuple[str, np.ndarray, list[str]]] = []
    orig_mat, orig_names = _orig_block(dataset)
    candidates.append(("orig", orig_mat, orig_names))
    if nfa is not None:
        candidates.append(("nfa", nfa.values, nfa.names()))
    if sf is not None:
        candidates.append(("sf", sf.matrix(), sf.names()))
    if pearl is not None:
        pearl = np.asarray(pearl, dtype=np.float64)
        candidates.append(
            ("pearl", pearl, [f"pearl_{j + 1}" for j in range(pearl.shape[1])]))

    mats, blocks, names, models = [], [], [], []
    for block, mat, block_names in candidates:
        if mat.shape[0] != n:
            raise InputDataError(f"{block} block has {mat.shape[0]} rows, expected {n}")
        reducible = block in ("orig", "nfa")
        if reducible and mat.shape[1] > opts.pca_threshold:
            d_keep = min(opts.pca_dims, mat.shape[1], split.train.size)
            model = pca_fit(mat[split.train], d_keep, block)
            mat = pca_transform(model, mat)
            block_names = [f"pc_{j + 1}" for j in range(d_keep)]
            models.append(model)
        mats.append(mat)
        blocks.extend([block] * mat.shape[1])
        names.extend(block_names)

    matrix = np.concatenate(mats, axis=1) if mats else np.zeros((n, 0))
    return AugmentedTable(matrix, tuple(blocks), tuple(names), tuple(models))


# ---------------------------------------------------------------------------
# persistence


def _cell(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def save_table(table: AugmentedTable, csv_path, meta_path,
               opts: AssembleOptions | None = None,
               seeds: dict | None = None) -> None:
    """CSV with one `block.name` header cell per column, plus a sidecar
    document with block layout, PCA parameters, and the seeds used."""
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"{b}.{name}" for b, name in zip(table.blocks, table.names)])
        for row in table.matrix:
            writer.writerow([_cell(x) for x in row])

    widths: dict[str, int] = {}
    for b in table.blocks:
        widths[b] = widths.get(b, 0) + 1
    meta = {
        "blocks": widths,
        "columns": [[b, name] for b, name in zip(table.blocks, table.names)],
        "pca": {
            "threshold": opts.pca_threshold if opts else None,
            "dims": opts.pca_dims if opts else None,
            "models": [
                {"block": m.block, "d_keep": m.d_keep,
                 "explained_variance": m.explained_variance.tolist()}
                for m in table.pca_models],
        },
        "seeds": seeds or {},
    }
    Path(meta_path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def load_table(csv_path) -> AugmentedTable:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputDataError(f"{csv_path}: empty table")
        blocks, names = [], []
        for cell in header:
            block, sep, name = cell.partition(".")
            if not sep or block not in BLOCK_ORDER:
                raise InputDataError(f"{csv_path}: bad column header {cell!r}")
            blocks.append(block)
            names.append(name)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InputDataError(
                    f"{csv_path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append([np.nan if c == "" else float(c) for c in row])
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return AugmentedTable(matrix, tuple(blocks), tuple(names))
