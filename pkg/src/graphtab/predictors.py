"""Predictors over augmented tables.

Two self-contained baselines (k-NN and a linear model), the label-shuffling
wrapper that symmetrizes any classifier over class relabelings, and the
client side of the file-based bridge to the external in-context backbone.

The built-ins impute missing cells with the train column mean and z-score
standardize on train statistics. The bridge receives raw values; the
backbone owns its preprocessing.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import BridgeError, InputDataError, LimitViolation, NumericError
from .kernels import sorted_sum

TASK_KINDS = ("binary", "multiclass", "regression")

MAX_BRIDGE_CLASSES = 10
MAX_BRIDGE_TRAIN_ROWS = 10000


@dataclass(frozen=True)
class PredictRequest:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    task_kind: str
    n_classes: int | None = None

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise InputDataError(f"unknown task kind: {self.task_kind!r}")
        tr = np.ascontiguousarray(self.train_x, dtype=np.float64)
        te = np.ascontiguousarray(self.test_x, dtype=np.float64)
        if tr.ndim != 2 or te.ndim != 2 or tr.shape[1] != te.shape[1]:
            raise InputDataError("train and test feature widths must match")
        if self.is_classification:
            y = np.ascontiguousarray(self.train_y, dtype=np.int64)
            if not self.n_classes or self.n_classes < 2:
                raise InputDataError("classification needs n_classes >= 2")
            if y.size and (y.min() < 0 or y.max() >= self.n_classes):
                raise InputDataError("train label out of range")
        else:
            y = np.ascontiguousarray(self.train_y, dtype=np.float64)
            if self.n_classes is not None:
                raise InputDataError("regression request has no n_classes")
        if y.shape != (tr.shape[0],):
            raise InputDataError("one train target per train row required")
        for name, arr in (("train_x", tr), ("train_y", y), ("test_x", te)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def is_classification(self) -> bool:
        return self.task_kind != "regression"

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]

    @property
    def n_test(self) -> int:
        return self.test_x.shape[0]


@dataclass(frozen=True)
class Prediction:
    task_kind: str
    probs: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.task_kind == "regression":
            if self.values is None or self.probs is not None:
                raise InputDataError("regression prediction carries values only")
            vals = np.ascontiguousarray(self.values, dtype=np.float64)
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)
        else:
            if self.probs is None or self.values is not None:
                raise InputDataError("classification prediction carries probs only")
            p = np.ascontiguousarray(self.probs, dtype=np.float64)
            if p.ndim != 2:
                raise InputDataError("probability matrix must be 2-D")
            if p.size and (p.min() < 0.0 or
                           np.abs(p.sum(axis=1) - 1.0).max() > 1e-6):
                raise NumericError("probability rows must be a simplex within 1e-6")
            p.setflags(write=False)
            object.__setattr__(self, "probs", p)

    def point_estimates(self) -> np.ndarray:
        if self.task_kind == "regression":
            return self.values
        return np.argmax(self.probs, axis=1)


Predictor = Callable[[PredictRequest], Prediction]


def _standardize(req: PredictRequest) -> tuple[np.ndarray, np.ndarray]:
    """Impute with the train column mean, z-score on train statistics."""
    train = req.train_x.copy()
    col_mean = np.nanmean(np.where(np.isnan(train).all(axis=0), 0.0, train), axis=0)
    col_mean = np.where(np.isnan(col_mean), 0.0, col_mean)

    def fill(x):
        out = x.copy()
        nan = np.isnan(out)
        if nan.any():
            out[nan] = np.broadcast_to(col_mean, out.shape)[nan]
        return out

    train = fill(train)
    std = train.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return (train - col_mean) / std, (fill(req.test_x) - col_mean) / std


def knn_predict(req: PredictRequest, k: int = 10) -> Prediction:
    """Euclidean k-nearest-neighbor vote / mean on standardized features.
    Distance ties resolve toward the lower train index; the regression mean
    sums neighbor targets in value-sorted order, so the output does not
    depend on train row order (for tie-free distances)."""
    if req.n_train == 0:
        raise InputDataError("k-NN with an empty train set")
    if not 1 <= k <= req.n_train:
        raise InputDataError(f"k must lie in [1, n_train={req.n_train}], got {k}")
    train, test = _standardize(req)
    d2 = (np.sum(test ** 2, axis=1)[:, None] + np.sum(train ** 2, axis=1)[None, :]
          - 2.0 * (test @ train.T))
    neighbor_idx = np.argsort(d2, axis=1, kind="stable")[:, :k]

    if req.is_classification:
        neighbor_labels = req.train_y[neighbor_idx]
        probs = np.zeros((req.n_test, req.n_classes))
        for c in range(req.n_classes):
            probs[:, c] = np.sum(neighbor_labels == c, axis=1)
        return Prediction(req.task_kind, probs=probs / k)
    vals = np.array([sorted_sum(req.train_y[row]) / k for row in neighbor_idx])
    return Prediction(req.task_kind, values=vals)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def linear_train_predict(req: PredictRequest, l2: float = 1e-3,
                         lr: float = 0.1, epochs: int = 300) -> Prediction:
    """Ridge regression in closed form; multinomial logistic regression by
    full-batch gradient descent from zero init (deterministic)."""
    if req.n_train == 0:
        raise InputDataError("linear predictor with an empty train set")
    if l2 < 0.0:
        raise InputDataError("l2 must be non-negative")
    train, test = _standardize(req)
    xb = np.hstack([train, np.ones((req.n_train, 1))])
    tb = np.hstack([test, np.ones((req.n_test, 1))])
    d = xb.shape[1]

    if not req.is_classification:
        penalty = l2 * np.eye(d)
        penalty[-1, -1] = 0.0  # intercept unpenalized
        try:
            beta = np.linalg.solve(xb.T @ xb + penalty, xb.T @ req.train_y)
        except np.linalg.LinAlgError:
            raise NumericError("singular normal matrix; set l2 > 0")
        return Prediction(req.task_kind, values=tb @ beta)

    if lr <= 0.0 or epochs < 1:
        raise InputDataError("lr must be positive and epochs at least 1")
    c = req.n_classes
    onehot = np.zeros((req.n_train, c))
    onehot[np.arange(req.n_train), req.train_y] = 1.0
    w = np.zeros((d, c))
    mask = np.ones((d, 1))
    mask[-1, 0] = 0.0  # no penalty on the bias row
    for _ in range(epochs):
        grad = xb.T @ (_softmax(xb @ w) - onehot) / req.n_train + l2 * (w * mask)
        w -= lr * grad
    return Prediction(req.task_kind, probs=_softmax(tb @ w))


def _permutations(n_classes: int, n_shuffles: int,
                  seed: int) -> list[tuple[int, ...]]:
    """Exhaustive when n_classes! fits in n_shuffles; otherwise the identity
    plus seeded distinct random permutations."""
    if math.factorial(n_classes) <= n_shuffles:
        return list(itertools.permutations(range(n_classes)))
    rng = np.random.default_rng(seed)
    chosen = [tuple(range(n_classes))]
    seen = set(chosen)
    while len(chosen) < n_shuffles:
        cand = tuple(int(x) for x in rng.permutation(n_classes))
        if cand not in seen:
            seen.add(cand)
            chosen.append(cand)
    return chosen


def label_shuffle_wrap(inner: Predictor, req: PredictRequest,
                       n_shuffles: int = 10, seed: int = 0) -> Prediction:
    """Run the inner classifier once per class permutation (relabeled
    targets), map each probability matrix back, and average in enumeration
    order."""
    if not req.is_classification:
        raise InputDataError("label shuffling applies to classification only")
    if n_shuffles < 1:
        raise InputDataError("n_shuffles must be at least 1")
    perms = _permutations(req.n_classes, n_shuffles, seed)
    acc = np.zeros((req.n_test, req.n_classes))
    for perm in perms:
        perm_arr = np.array(perm, dtype=np.int64)
        shuffled = PredictRequest(req.train_x, perm_arr[req.train_y], req.test_x,
                                  req.task_kind, req.n_classes)
        probs = inner(shuffled).probs
        acc += probs[:, perm_arr]
    return Prediction(req.task_kind, probs=acc / len(perms))


# ---------------------------------------------------------------------------
# bridge client


def _write_rows(path: Path, header: list[str], rows: np.ndarray,
                targets: np.ndarray | None = None,
                classification: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(rows.shape[0]):
            cells = ["" if np.isnan(x) else repr(float(x)) for x in rows[i]]
            if targets is not None:
                cells.append(str(int(targets[i])) if classification
                             else repr(float(targets[i])))
            writer.writerow(cells)


def bridge_predict(req: PredictRequest, endpoint, timeout: float = 60.0,
                   poll_interval: float = 0.05) -> Prediction:
    """Write the request in the bridge wire format under ``endpoint``, poll
    for the reply, validate it.

    Wire format: a fresh request directory with train.csv (features plus a
    final __target__ column), test.csv, meta.json, and an empty READY file
    written last. The bridge answers with predictions.csv (no header;
    n_classes probability columns for classification, one column for
    regression) and a DONE sentinel, or ERROR with a message.
    """
    if req.is_classification and req.n_classes > MAX_BRIDGE_CLASSES:
        raise LimitViolation(
            f"backbone accepts at most {MAX_BRIDGE_CLASSES} classes, "
            f"got {req.n_classes}")
    if req.n_train > MAX_BRIDGE_TRAIN_ROWS:
        raise LimitViolation(
            f"backbone accepts at most {MAX_BRIDGE_TRAIN_ROWS} train rows, "
            f"got {req.n_train}")

    endpoint = Path(endpoint)
    if not endpoint.is_dir():
        raise BridgeError(f"bridge endpoint {endpoint} is not a directory")
    request_id = f"req-{uuid.uuid4().hex[:12]}"
    req_dir = endpoint / request_id
    req_dir.mkdir()

    feat_names = [f"f{j}" for j in range(req.train_x.shape[1])]
    _write_rows(req_dir / "train.csv", feat_names + ["__target__"], req.train_x,
                req.train_y, req.is_classification)
    _write_rows(req_dir / "test.csv", feat_names, req.test_x)
    meta = {"task": req.task_kind, "request_id": request_id}
    if req.is_classification:
        meta["n_classes"] = req.n_classes
    (req_dir / "meta.json").write_text(json.dumps(meta) + "\n", encoding="utf-8")
    (req_dir / "READY").touch()  # sentinel last: request is now complete

    deadline = time.monotonic() + timeout
    interval = poll_interval
    while True:
        if (req_dir / "ERROR").exists():
            msg = (req_dir / "ERROR").read_text(encoding="utf-8").strip()
            raise BridgeError(f"bridge rejected request: {msg or 'no message'}")
        if (req_dir / "DONE").exists():
            break
        if time.monotonic() >= deadline:
            raise BridgeError(f"bridge timed out after {timeout:.1f}s")
        time.sleep(interval)
        interval = min(interval * 1.5, 1.0)

    return _parse_reply(req_dir / "predictions.csv", req)


def _parse_reply(path: Path, req: PredictRequest) -> Prediction:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BridgeError(f"bridge reply unreadable: {exc}")
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError:
            raise BridgeError(f"malformed bridge reply line: {line!r}")
    width = req.n_classes if req.is_classification else 1
    if len(rows) != req.n_test or any(len(r) != width for r in rows):
        raise BridgeError(
            f"bridge reply must be {req.n_test} x {width}, "
            f"got {len(rows)} row(s)")
    mat = np.array(rows, dtype=np.float64).reshape(req.n_test, width)
    if not np.isfinite(mat).all():
        raise BridgeError("non-finite values in bridge reply")
    if not req.is_classification:
        return Prediction(req.task_kind, values=mat[:, 0])
    if mat.size and (mat.min() < -1e-9 or
                     np.abs(mat.sum(axis=1) - 1.0).max() > 1e-6):
        raise BridgeError("bridge reply rows are not a probability simplex")
    return Prediction(req.task_kind, probs=np.maximum(mat, 0.0))
