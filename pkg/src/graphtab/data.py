"""Data model for attributed graphs: adjacency, feature table, task, splits.

On-disk formats:
  * edge file      -- two integer columns (comma or whitespace separated),
                      optional ``src,dst`` header; symmetrized on load.
  * feature file   -- delimited table with a header row, one row per node in
                      id order; the target column is named by the meta file.
                      Empty cells are missing; categorical missing may also be
                      spelled with the explicit token ``∅``.
  * meta file      -- JSON: {"columns": {name: kind}, "target": name,
                      "task": "binary"|"multiclass"|"regression",
                      "n_classes": optional int}
  * split file     -- JSON: {"train": [...], "val": [...], "test": [...],
                      "seed": int}
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputDataError

log = logging.getLogger("graphtab")

NUMERICAL = "numerical"
CATEGORICAL = "categorical"
MISSING_TOKEN = "∅"

TASK_KINDS = ("binary", "multiclass", "regression")


def _as_index_array(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


@dataclass(frozen=True)
class Graph:
    """Undirected graph in compressed sparse row form.

    ``col_indices[row_offsets[i]:row_offsets[i+1]]`` is the ascending neighbor
    list of node i. Storage is symmetric (both directions present), with no
    self-loops and no duplicates. Arrays are frozen after validation.
    """

    n_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray

    def __post_init__(self):
        offsets = _as_index_array(self.row_offsets)
        cols = _as_index_array(self.col_indices)
        object.__setattr__(self, "row_offsets", offsets)
        object.__setattr__(self, "col_indices", cols)
        n = self.n_nodes
        if offsets.shape != (n + 1,):
            raise InputDataError(f"row_offsets must have length n_nodes+1={n + 1}")
        if offsets[0] != 0 or offsets[-1] != cols.shape[0]:
            raise InputDataError("row_offsets must start at 0 and end at len(col_indices)")
        if np.any(np.diff(offsets) < 0):
            raise InputDataError("row_offsets must be non-decreasing")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise InputDataError("col_indices out of range")
        src = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
        if np.any(src == cols):
            raise InputDataError("self-loops are not allowed")
        # ascending within each row also rules out duplicates
        within = np.diff(cols)
        same_row = src[1:] == src[:-1] if cols.size else np.array([], dtype=bool)
        if np.any(within[same_row] <= 0):
            raise InputDataError("neighbor lists must be strictly ascending")
        # symmetry: the reversed edge set must equal the forward edge set
        order = np.lexsort((src, cols))
        if not (np.array_equal(cols[order], src) and np.array_equal(src[order], cols)):
            raise InputDataError("adjacency is not symmetric")
        offsets.setflags(write=False)
        cols.setflags(write=False)

    @property
    def n_edges(self) -> int:
        """Undirected edge count."""
        return self.col_indices.shape[0] // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    def edge_list(self) -> np.ndarray:
        """(n_edges, 2) array with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.n_nodes, dtype=np.int64), np.diff(self.row_offsets))
        keep = src < self.col_indices
        return np.column_stack([src[keep], self.col_indices[keep]])


def build_graph(n_nodes: int, edges: np.ndarray) -> tuple[Graph, int]:
    """Build a Graph from a raw (possibly directed/duplicated) edge array.

    Edges are symmetrized and deduplicated; self-loops are dropped. Returns
    the graph and the number of self-loop rows found in the input.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n_nodes):
        bad = edges[(edges < 0).any(axis=1) | (edges >= n_nodes).any(axis=1)][0]
        raise InputDataError(
            f"node id out of range: edge ({bad[0]}, {bad[1]}) with n_nodes={n_nodes}")
    loops = int(np.sum(edges[:, 0] == edges[:, 1]))
    edges = edges[edges[:, 0] != edges[:, 1]]
    both = np.concatenate([edges, edges[:, ::-1]], axis=0)
    if both.size:
        both = np.unique(both, axis=0)
    src, cols = both[:, 0], both[:, 1]
    offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n_nodes), out=offsets[1:])
    return Graph(n_nodes, offsets, np.ascontiguousarray(cols)), loops


@dataclass(frozen=True)
class Column:
    """One feature column; numerical uses NaN as the missing marker,
    categorical uses code -1 plus an explicit vocabulary."""

    name: str
    kind: str
    values: np.ndarray
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (NUMERICAL, CATEGORICAL):
            raise InputDataError(f"unknown column kind: {self.kind!r}")
        if self.kind == NUMERICAL:
            vals = np.ascontiguousarray(self.values, dtype=np.float64)
            if self.categories is not None:
                raise InputDataError("numerical column cannot carry categories")
        else:
            vals = np.ascontiguousarray(self.values, dtype=np.int64)
            if self.categories is None:
                raise InputDataError(f"categorical column {self.name!r} needs a vocabulary")
            if vals.size and (vals.min() < -1 or vals.max() >= len(self.categories)):
                raise InputDataError(f"category code out of range in column {self.name!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.categories is not None:
            object.__setattr__(self, "categories", tuple(self.categories))


@dataclass(frozen=True)
class FeatureTable:
    """Column-oriented node feature store."""

    n_rows: int
    columns: tuple[Column, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        for col in self.columns:
            if col.values.shape[0] != self.n_rows:
                raise InputDataError(
                    f"column {col.name!r} has {col.values.shape[0]} rows, expected {self.n_rows}")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise InputDataError("duplicate column names")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass(frozen=True)
class TaskSpec:
    """Prediction target: class indices (code -1 missing) or real values
    (NaN missing). Missing targets are allowed only outside the split."""

    task_kind: str
    targets: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise InputDataError(f"unknown task kind: {self.task_kind!r}")
        if self.task_kind == "regression":
            t = np.ascontiguousarray(self.targets, dtype=np.float64)
            if self.n_classes is not None:
                raise InputDataError("regression task has no n_classes")
        else:
            t = np.ascontiguousarray(self.targets, dtype=np.int64)
            c = self.n_classes
            if c is None:
                raise InputDataError("classification task needs n_classes")
            if self.task_kind == "binary" and c != 2:
                raise InputDataError("binary task requires n_classes=2")
            if self.task_kind == "multiclass" and c < 3:
                raise InputDataError("multiclass task requires n_classes >= 3")
            if t.size and (t.min() < -1 or t.max() >= c):
                raise InputDataError("class index out of range")
        t.setflags(write=False)
        object.__setattr__(self, "targets", t)

    @property
    def is_classification(self) -> bool:
        return self.task_kind != "regression"

    def labeled_mask(self) -> np.ndarray:
        if self.task_kind == "regression":
            return ~np.isnan(self.targets)
        return self.targets >= 0


@dataclass(frozen=True)
class Dataset:
    graph: Graph
    features: FeatureTable
    task: TaskSpec

    def __post_init__(self):
        if self.features.n_rows != self.graph.n_nodes:
            raise InputDataError("feature table row count != n_nodes")
        if self.task.targets.shape[0] != self.graph.n_nodes:
            raise InputDataError("target length != n_nodes")


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int

    def __post_init__(self):
        for part in ("train", "val", "test"):
            arr = np.sort(_as_index_array(getattr(self, part)))
            if arr.size == 0:
                raise InputDataError(f"{part} part of the split is empty")
            if arr.min() < 0:
                raise InputDataError("split indices must be non-negative")
            if np.any(np.diff(arr) == 0):
                raise InputDataError(f"duplicate indices in {part}")
            arr.setflags(write=False)
            object.__setattr__(self, part, arr)
        union = np.concatenate([self.train, self.val, self.test])
        if np.unique(union).size != union.size:
            raise InputDataError("split parts must be pairwise disjoint")

    def check_range(self, n_nodes: int) -> None:
        if max(self.train.max(), self.val.max(), self.test.max()) >= n_nodes:
            raise InputDataError("split index out of range for this dataset")


@dataclass(frozen=True)
class DatasetStats:
    n_nodes: int
    n_edges: int
    n_features: int
    mean_degree: float
    edge_homophily: float | None = None


# ---------------------------------------------------------------------------
# parsing helpers


def _split_line(line: str) -> list[str]:
    line = line.strip()
    if "," in line:
        return [t.strip() for t in line.split(",")]
    return line.split()


def _parse_edge_file(path: Path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = _split_line(line)
            if not tokens:
                continue
            try:
                rows.append((int(tokens[0]), int(tokens[1])))
            except (ValueError, IndexError):
                if lineno == 1:  # optional header
                    continue
                raise InputDataError(f"{path}:{lineno}: bad edge line {line.strip()!r}")
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def _is_missing_numerical(token: str) -> bool:
    return token == "" or token.lower() == "nan"


def _parse_feature_file(path: Path, kinds: dict[str, str], target: str,
                        task_kind: str) -> tuple[FeatureTable, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputDataError(f"{path}: empty feature file")
        header = [h.strip() for h in header]
        raw = {name: [] for name in header}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InputDataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for name, cell in zip(header, row):
                raw[name].append(cell.strip())

    if target not in header:
        raise InputDataError(f"{path}: target column {target!r} missing")
    for name in header:
        if name != target and name not in kinds:
            raise InputDataError(f"{path}: column {name!r} not declared in meta")

    n_rows = len(raw[header[0]])
    columns = []
    for name in header:
        if name == target:
            continue
        kind = kinds[name]
        cells = raw[name]
        if kind == NUMERICAL:
            vals = np.empty(n_rows, dtype=np.float64)
            for i, cell in enumerate(cells):
                if _is_missing_numerical(cell):
                    vals[i] = np.nan
                else:
                    try:
                        vals[i] = float(cell)
                    except ValueError:
                        raise InputDataError(
                            f"{path}:{i + 2}: non-numeric value {cell!r} "
                            f"in numerical column {name!r}")
            columns.append(Column(name, NUMERICAL, vals))
        elif kind == CATEGORICAL:
            vocab: dict[str, int] = {}
            codes = np.empty(n_rows, dtype=np.int64)
            for i, cell in enumerate(cells):
                if cell == "" or cell == MISSING_TOKEN:
                    codes[i] = -1
                else:
                    codes[i] = vocab.setdefault(cell, len(vocab))
            columns.append(Column(name, CATEGORICAL, codes, tuple(vocab)))
        else:
            raise InputDataError(f"unknown column kind {kind!r} for column {name!r}")

    targets = _parse_targets(raw[target], task_kind, path)
    return FeatureTable(n_rows, tuple(columns)), targets


def _parse_targets(cells: list[str], task_kind: str, path: Path) -> np.ndarray:
    if task_kind == "regression":
        out = np.empty(len(cells), dtype=np.float64)
        for i, cell in enumerate(cells):
            if _is_missing_numerical(cell):
                out[i] = np.nan
            else:
                try:
                    out[i] = float(cell)
                except ValueError:
                    raise InputDataError(f"{path}:{i + 2}: non-numeric target {cell!r}")
        return out
    out = np.empty(len(cells), dtype=np.int64)
    for i, cell in enumerate(cells):
        if cell == "":
            out[i] = -1
        else:
            try:
                out[i] = int(cell)
            except ValueError:
                raise InputDataError(f"{path}:{i + 2}: non-integer class label {cell!r}")
    return out


def load_dataset(edge_path, feature_path, meta_path) -> Dataset:
    """Load and validate a dataset from its three on-disk files."""
    edge_path, feature_path, meta_path = Path(edge_path), Path(feature_path), Path(meta_path)
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputDataError(f"{meta_path}: invalid JSON ({exc})")
    for key in ("columns", "target", "task"):
        if key not in meta:
            raise InputDataError(f"{meta_path}: missing field {key!r}")
    task_kind = meta["task"]
    if task_kind not in TASK_KINDS:
        raise InputDataError(f"{meta_path}: unknown task {task_kind!r}")
    kinds = dict(meta["columns"])
    for name, kind in kinds.items():
        if kind not in (NUMERICAL, CATEGORICAL):
            raise InputDataError(f"{meta_path}: unknown column kind {kind!r} for {name!r}")

    features, targets = _parse_feature_file(feature_path, kinds, meta["target"], task_kind)
    edges = _parse_edge_file(edge_path)
    graph, loops = build_graph(features.n_rows, edges)
    if loops:
        log.info("dropped %d self-loop(s) from %s", loops, edge_path)

    if task_kind == "regression":
        task = TaskSpec(task_kind, targets)
    else:
        n_classes = meta.get("n_classes")
        if n_classes is None:
            n_classes = 2 if task_kind == "binary" else int(targets.max()) + 1
        task = TaskSpec(task_kind, targets, int(n_classes))
    return Dataset(graph, features, task)


# ---------------------------------------------------------------------------
# canonical on-disk layout


def _format_float(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def save_dataset(dataset: Dataset, out_dir) -> None:
    """Persist a dataset in the canonical directory layout
    (edges.csv / features.csv / meta.json); round-trips exactly."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "edges.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst"])
        for u, v in dataset.graph.edge_list():
            writer.writerow([int(u), int(v)])

    task = dataset.task
    target_name = "__target__" if "__target__" not in dataset.features.names else "__target2__"
    with open(out_dir / "features.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset.features.names + [target_name])
        cols = dataset.features.columns
        for i in range(dataset.features.n_rows):
            row = []
            for col in cols:
                if col.kind == NUMERICAL:
                    row.append(_format_float(col.values[i]))
                else:
                    code = col.values[i]
                    row.append(MISSING_TOKEN if code < 0 else col.categories[code])
            if task.task_kind == "regression":
                row.append(_format_float(task.targets[i]))
            else:
                row.append("" if task.targets[i] < 0 else str(int(task.targets[i])))
            writer.writerow(row)

    meta = {
        "columns": {c.name: c.kind for c in dataset.features.columns},
        "target": target_name,
        "task": task.task_kind,
    }
    if task.n_classes is not None:
        meta["n_classes"] = task.n_classes
    (out_dir / "meta.json").write_text(json.dumps(meta, ensure_ascii=False, indent=2) + "\n",
                                       encoding="utf-8")


def load_dataset_dir(dataset_dir) -> Dataset:
    d = Path(dataset_dir)
    return load_dataset(d / "edges.csv", d / "features.csv", d / "meta.json")


def save_split(split: Split, path) -> None:
    doc = {"train": split.train.tolist(), "val": split.val.tolist(),
           "test": split.test.tolist(), "seed": split.seed}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_split(path) -> Split:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputDataError(f"{path}: invalid JSON ({exc})")
    try:
        return Split(np.array(doc["train"], dtype=np.int64),
                     np.array(doc["val"], dtype=np.int64),
                     np.array(doc["test"], dtype=np.int64), int(doc["seed"]))
    except KeyError as exc:
        raise InputDataError(f"{path}: missing field {exc}")


# ---------------------------------------------------------------------------
# splits and statistics


def _part_sizes(n: int, ratios: tuple[float, float, float]) -> list[int]:
    sizes = [int(np.floor(n * r)) for r in ratios]
    for i in range(n - sum(sizes)):  # remainder goes train-first
        sizes[i % 3] += 1
    return sizes


def make_split(dataset: Dataset, ratios: tuple[float, float, float],
               stratified: bool, seed: int) -> Split:
    """Random (optionally stratified) train/val/test split, deterministic in seed.

    Nodes with a missing target are left out of all three parts.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise InputDataError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InputDataError(f"ratios must sum to 1, got {sum(ratios)}")
    if stratified and not dataset.task.is_classification:
        raise InputDataError("stratified splitting requires a classification task")

    rng = np.random.default_rng(seed)
    eligible = np.flatnonzero(dataset.task.labeled_mask())
    parts: list[list[np.ndarray]] = [[], [], []]

    if stratified:
        labels = dataset.task.targets[eligible]
        for c in range(dataset.task.n_classes):
            members = eligible[labels == c]
            if members.size < 3:
                raise InputDataError(
                    f"class {c} has {members.size} node(s), fewer than the 3 split parts")
            perm = rng.permutation(members)
            sizes = _part_sizes(members.size, ratios)
            parts[0].append(perm[:sizes[0]])
            parts[1].append(perm[sizes[0]:sizes[0] + sizes[1]])
            parts[2].append(perm[sizes[0] + sizes[1]:])
    else:
        perm = rng.permutation(eligible)
        sizes = _part_sizes(eligible.size, ratios)
        parts[0].append(perm[:sizes[0]])
        parts[1].append(perm[sizes[0]:sizes[0] + sizes[1]])
        parts[2].append(perm[sizes[0] + sizes[1]:])

    train, val, test = (np.sort(np.concatenate(p)) for p in parts)
    return Split(train, val, test, seed)


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Basic statistics; edge homophily only for classification tasks,
    computed over edges whose both endpoints carry a label."""
    g = dataset.graph
    homophily = None
    if dataset.task.is_classification:
        edges = g.edge_list()
        labels = dataset.task.targets
        lu, lv = labels[edges[:, 0]], labels[edges[:, 1]]
        both = (lu >= 0) & (lv >= 0)
        homophily = float(np.mean(lu[both] == lv[both])) if both.any() else float("nan")
    mean_degree = 2.0 * g.n_edges / g.n_nodes if g.n_nodes else 0.0
    return DatasetStats(g.n_nodes, g.n_edges, len(dataset.features.columns),
                        mean_degree, homophily)
