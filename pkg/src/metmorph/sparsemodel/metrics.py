"""Ranking metrics computed from scratch.

roc_auc gives half credit to score ties, so AUC * n0 * n1 equals the
Mann-Whitney U of the positive scores against the negative scores exactly.
Average precision is the step sum of precision over recall increments, with
tied scores entering as one threshold group (order independent).
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalError
from ..stats import midranks


def _check_binary(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0 or not np.isin(y, (0, 1)).all():
        raise NumericalError("labels must be binary 0/1")
    if y.min() == y.max():
        raise NumericalError("both classes must be present")
    return y


def roc_auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties half)."""
    y = _check_binary(labels)
    s = np.asarray(scores, dtype=np.float64)
    ranks = midranks(s)
    n1 = int(y.sum())
    n0 = y.size - n1
    u = float(ranks[y == 1].sum()) - n1 * (n1 + 1) / 2.0
    return u / (n0 * n1)


def roc_points(scores, labels):
    """(fpr, tpr, threshold) rows over distinct thresholds, descending."""
    y = _check_binary(labels)
    s = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    n1 = int(y.sum())
    n0 = y.size - n1
    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    i = 0
    while i < y.size:
        j = i
        while j + 1 < y.size and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        tp += int(y_sorted[i : j + 1].sum())
        fp += (j - i + 1) - int(y_sorted[i : j + 1].sum())
        points.append((fp / n0, tp / n1, float(s_sorted[i])))
        i = j + 1
    return points


def pr_curve(scores, labels):
    """((recall, precision, threshold) rows, average precision)."""
    y = _check_binary(labels)
    s = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    n1 = int(y.sum())
    points = []
    ap = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    while i < y.size:
        j = i
        while j + 1 < y.size and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        block_tp = int(y_sorted[i : j + 1].sum())
        tp += block_tp
        fp += (j - i + 1) - block_tp
        precision = tp / (tp + fp)
        recall = tp / n1
        points.append((recall, precision, float(s_sorted[i])))
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return points, ap
