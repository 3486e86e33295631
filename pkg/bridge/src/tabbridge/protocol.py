"""Bridge wire format: request parsing and reply writing.

A request directory holds train.csv (feature columns plus a final
``__target__`` column), test.csv (the same feature columns), meta.json, and
an empty READY sentinel written last by the producer. Empty cells encode
missing values. The reply is predictions.csv without a header (one
probability column per class, or a single value column for regression)
followed by DONE; rejected requests get ERROR with a one-line message.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_CLASSES = 10
MAX_TRAIN_ROWS = 10_000

TASKS = ("binary", "multiclass", "regression")


class ProtocolError(ValueError):
    """Request violates the wire format."""


class LimitViolation(ProtocolError):
    """Request exceeds a backbone capacity limit."""


@dataclass(frozen=True)
class Request:
    task: str
    n_classes: int | None
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray

    @property
    def is_classification(self) -> bool:
        return self.task != "regression"


def _read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.is_file():
        raise ProtocolError(f"missing {path.name}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ProtocolError(f"{path.name} is empty")
    header, body = rows[0], rows[1:]
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise ProtocolError(f"{path.name} row {i + 2}: expected "
                                f"{len(header)} fields, got {len(row)}")
    return header, body


def _float_cell(text: str, where: str) -> float:
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise ProtocolError(f"{where}: not a number: {text!r}")


def load_request(req_dir) -> Request:
    """Parse and validate one request directory; enforces the class and
    train-row caps before any prediction work."""
    req_dir = Path(req_dir)
    meta_path = req_dir / "meta.json"
    if not meta_path.is_file():
        raise ProtocolError("missing meta.json")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"meta.json: invalid JSON ({exc})")
    if not isinstance(meta, dict):
        raise ProtocolError("meta.json must be a JSON object")

    task = meta.get("task")
    if task not in TASKS:
        raise ProtocolError(f"meta.json: task must be one of {TASKS}, "
                            f"got {task!r}")
    n_classes = None
    if task != "regression":
        n_classes = meta.get("n_classes")
        if not isinstance(n_classes, int) or n_classes < 2:
            raise ProtocolError("meta.json: classification needs an integer "
                                "n_classes >= 2")
        if n_classes > MAX_CLASSES:
            raise LimitViolation(f"backbone accepts at most {MAX_CLASSES} "
                                 f"classes, got {n_classes}")

    train_header, train_body = _read_table(req_dir / "train.csv")
    if not train_header or train_header[-1] != "__target__":
        raise ProtocolError("train.csv: last column must be __target__")
    feat_names = train_header[:-1]
    test_header, test_body = _read_table(req_dir / "test.csv")
    if test_header != feat_names:
        raise ProtocolError("test.csv: feature columns do not match train.csv")
    if not train_body:
        raise ProtocolError("train.csv has no data rows")
    if not test_body:
        raise ProtocolError("test.csv has no data rows")
    if len(train_body) > MAX_TRAIN_ROWS:
        raise LimitViolation(f"backbone accepts at most {MAX_TRAIN_ROWS} "
                             f"train rows, got {len(train_body)}")

    d = len(feat_names)
    train_x = np.empty((len(train_body), d))
    train_y = np.empty(len(train_body))
    for i, row in enumerate(train_body):
        for j in range(d):
            train_x[i, j] = _float_cell(row[j], f"train.csv row {i + 2}")
        y = _float_cell(row[d], f"train.csv row {i + 2}")
        if math.isnan(y):
            raise ProtocolError(f"train.csv row {i + 2}: missing target")
        train_y[i] = y
    test_x = np.empty((len(test_body), d))
    for i, row in enumerate(test_body):
        for j in range(d):
            test_x[i, j] = _float_cell(row[j], f"test.csv row {i + 2}")

    if task != "regression":
        labels = train_y.astype(np.int64)
        if not np.array_equal(labels, train_y):
            raise ProtocolError("train.csv: classification targets must be "
                                "integers")
        if labels.min() < 0 or labels.max() >= n_classes:
            raise ProtocolError(f"train.csv: targets outside "
                                f"[0, {n_classes})")
        train_y = labels
    return Request(task, n_classes, train_x, train_y, test_x)


def write_reply(req_dir, matrix: np.ndarray) -> None:
    """Persist predictions.csv, then the DONE sentinel (in that order, so a
    DONE always points at a complete reply)."""
    req_dir = Path(req_dir)
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(req_dir / "predictions.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in matrix:
            writer.writerow([repr(float(x)) for x in row])
    (req_dir / "DONE").touch()


def write_error(req_dir, message: str) -> None:
    (Path(req_dir) / "ERROR").write_text(message.strip() + "\n",
                                         encoding="utf-8")
