"""Feature-selection metrics: F1 at fixed model size, ROC curves and AUC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionEval:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float


def _as_index_set(idx, p: int, what: str) -> np.ndarray:
    arr = np.unique(np.asarray(idx, dtype=np.int64).ravel())
    if arr.size and (arr[0] < 0 or arr[-1] >= p):
        raise MetricError(f"{what} indices must lie in [0, {p})")
    return arr


def f1_at(selected, true_support, p: int) -> SelectionEval:
    """Precision, recall and F1 of a selected index set (0-based indices)."""
    sel = _as_index_set(selected, p, "selected")
    tru = _as_index_set(true_support, p, "true support")
    if tru.size == 0:
        raise MetricError("true support is empty; recall is undefined")
    tp = int(np.intersect1d(sel, tru, assume_unique=True).size)
    fp = int(sel.size - tp)
    fn = int(tru.size - tp)
    tn = int(p - tp - fp - fn)
    precision = tp / sel.size if sel.size else 0.0
    recall = tp / tru.size
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return SelectionEval(tp, fp, fn, tn, precision, recall, f1)


@dataclass(frozen=True)
class ROCCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    degenerate: bool = False

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc(scores, true_support) -> ROCCurve:
    """ROC over all distinct score thresholds, ties grouped, trapezoidal AUC.

    Points are (1 - specificity, sensitivity), from (0, 0) to (1, 1).
    """
    s = np.asarray(scores, dtype=float).ravel()
    p = s.shape[0]
    if not np.all(np.isfinite(s)):
        raise MetricError("scores must be finite")
    tru = _as_index_set(true_support, p, "true support")
    if not 0 < tru.size < p:
        raise MetricError("true support must be a non-empty proper subset")
    label = np.zeros(p, dtype=bool)
    label[tru] = True
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    lab = label[order]
    # last index of each block of tied scores
    ends = np.flatnonzero(np.diff(s_sorted) != 0)
    ends = np.append(ends, p - 1)
    tp = np.cumsum(lab)[ends]
    fp = np.cumsum(~lab)[ends]
    tpr = np.concatenate([[0.0], tp / tru.size])
    fpr = np.concatenate([[0.0], fp / (p - tru.size)])
    thr = np.concatenate([[np.inf], s_sorted[ends]])
    # trapezoids on integer counts, normalised once
    tpc = np.concatenate([[0], tp])
    fpc = np.concatenate([[0], fp])
    area2 = int(np.sum(np.diff(fpc) * (tpc[1:] + tpc[:-1])))
    auc = area2 / (2.0 * tru.size * (p - tru.size))
    return ROCCurve(fpr, tpr, thr, auc, degenerate=ends.size == 1)
