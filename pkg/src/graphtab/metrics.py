"""Evaluation metrics: average precision, accuracy, R^2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputDataError

METRIC_BY_TASK = {"binary": "average_precision",
                  "multiclass": "accuracy",
                  "regression": "r2"}


@dataclass(frozen=True)
class MetricResult:
    name: str
    value: float
    n_eval: int


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """AP over the descending-score ranking.

    Tied scores form a group; every positive in a group is credited the
    group's precision (cumulative positives through the group over cumulative
    count through the group). In particular, all-equal scores give exactly
    p/n. This is deterministic and independent of input order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputDataError("scores and labels must be equal-length vectors")
    if np.isnan(scores).any():
        raise InputDataError("NaN score")
    if not np.isin(labels, (0, 1)).all():
        raise InputDataError("labels must be binary 0/1")
    total_pos = int(labels.sum())
    if total_pos == 0:
        raise InputDataError("average precision undefined without positives")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.int64)
    n = s.shape[0]
    ap = 0.0
    seen = 0
    pos_seen = 0
    i = 0
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        grp_pos = int(y[i:j].sum())
        if grp_pos:
            ap += grp_pos * (pos_seen + grp_pos) / (seen + (j - i))
        pos_seen += grp_pos
        seen += j - i
        i = j
    return ap / total_pos


def accuracy(pred_classes: np.ndarray, labels: np.ndarray) -> float:
    pred_classes = np.asarray(pred_classes)
    labels = np.asarray(labels)
    if pred_classes.shape != labels.shape or pred_classes.ndim != 1:
        raise InputDataError("predictions and labels must be equal-length vectors")
    if pred_classes.size == 0:
        raise InputDataError("accuracy of an empty vector")
    return float(np.mean(pred_classes == labels))


def r2(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.ndim != 1:
        raise InputDataError("predictions and targets must be equal-length vectors")
    if pred.size < 2:
        raise InputDataError("R^2 needs at least 2 points")
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot == 0.0:
        raise InputDataError("R^2 undefined for zero target variance")
    ss_res = float(np.sum((target - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def evaluate(task_kind: str, probs_or_values: np.ndarray,
             targets: np.ndarray) -> MetricResult:
    """Route to the task's metric: AP for binary (score = P(class 1)),
    accuracy for multiclass (argmax class), R^2 for regression."""
    if task_kind == "binary":
        value = average_precision(probs_or_values[:, 1], targets)
    elif task_kind == "multiclass":
        value = accuracy(np.argmax(probs_or_values, axis=1), targets)
    elif task_kind == "regression":
        value = r2(probs_or_values, targets)
    else:
        raise InputDataError(f"unknown task kind: {task_kind!r}")
    return MetricResult(METRIC_BY_TASK[task_kind], value, int(len(targets)))
