"""MSE against the true effect matrix, subgroup classification rates, ROC/AUC."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UndefinedRateError

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC points ordered from threshold +inf down to -inf.

    ``thresholds[k]`` is the cut for ``points[k]``: subjects with score
    ``>= thresholds[k]`` are called positive.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self, path):
        write_roc_csv(path, self)


def mse(H_hat, H_true):
    """Mean of squared entrywise differences."""
    H_hat = np.asarray(H_hat, dtype=float)
    H_true = np.asarray(H_true, dtype=float)
    if H_hat.shape != H_true.shape:
        raise DimensionError(f"shape mismatch {H_hat.shape} vs {H_true.shape}")
    diff = H_hat - H_true
    return float(np.mean(diff * diff))


def subject_scores(H):
    """Row sums: each subject's effect summed over outcomes."""
    return np.asarray(H, dtype=float).sum(axis=1)


def _classes(s_true):
    pos = np.asarray(s_true, dtype=float) > 0
    return pos, ~pos


def classification_rates(s_hat, s_true, threshold=0.0):
    """``(FPR, FNR, TPR)`` of calling ``s_hat > threshold`` against the sign of ``s_true``.

    A subject is truly positive when its true summed effect is ``> 0``.
    """
    s_hat = np.asarray(s_hat, dtype=float)
    s_true = np.asarray(s_true, dtype=float)
    if s_hat.shape != s_true.shape:
        raise DimensionError(f"shape mismatch {s_hat.shape} vs {s_true.shape}")
    pos, neg = _classes(s_true)
    if not neg.any():
        raise UndefinedRateError("FPR undefined: no subject has a non-positive true score")
    if not pos.any():
        raise UndefinedRateError("FNR undefined: no subject has a positive true score")
    called = s_hat > threshold
    fpr = np.count_nonzero(called & neg) / np.count_nonzero(neg)
    fnr = np.count_nonzero(~called & pos) / np.count_nonzero(pos)
    return float(fpr), float(fnr), float(1.0 - fnr)


def roc_and_auc(s_hat, s_true):
    """ROC sweep over every distinct estimated score, AUC by the trapezoidal rule.

    Tied scores move together, giving one diagonal step per tie group.
    """
    s_hat = np.asarray(s_hat, dtype=float)
    s_true = np.asarray(s_true, dtype=float)
    if s_hat.shape != s_true.shape:
        raise DimensionError(f"shape mismatch {s_hat.shape} vs {s_true.shape}")
    pos, neg = _classes(s_true)
    n_pos, n_neg = np.count_nonzero(pos), np.count_nonzero(neg)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedRateError("ROC needs both a positive and a non-positive true class")

    order = np.argsort(-s_hat, kind="mergesort")
    scores = s_hat[order]
    tp = np.cumsum(pos[order])
    fp = np.cumsum(neg[order])
    # last index of each group of equal scores
    last = np.flatnonzero(np.r_[scores[1:] != scores[:-1], True])
    thresholds = np.r_[np.inf, scores[last], -np.inf]
    tpr = np.r_[0.0, tp[last] / n_pos, 1.0]
    fpr = np.r_[0.0, fp[last] / n_neg, 1.0]
    auc = float(_trapezoid(tpr, fpr))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auc=auc)


def write_roc_csv(path, curve: RocCurve):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for th, f, t in zip(curve.thresholds, curve.fpr, curve.tpr):
            writer.writerow([repr(float(th)), repr(float(f)), repr(float(t))])
