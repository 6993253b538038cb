"""Regression and classification scores.

RMSE here is raw (unnormalized). F1 and AUC are macro averages.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, SingleClassOnly, ZeroVariance


def _pair(predicted, actual) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape:
        raise DimensionMismatch(f"shape mismatch {p.shape} vs {a.shape}")
    if p.size == 0:
        raise EmptyInput("nothing to score")
    return p, a


def rmse(predicted, actual) -> float:
    p, a = _pair(predicted, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(predicted, actual) -> float:
    p, a = _pair(predicted, actual)
    return float(np.mean(np.abs(p - a)))


def r2(predicted, actual) -> float:
    """Coefficient of determination per output row, averaged uniformly.

    1-D inputs are a single output; 2-D inputs are ``outputs x time``.
    """
    p, a = _pair(predicted, actual)
    p = np.atleast_2d(p)
    a = np.atleast_2d(a)
    ss_tot = np.sum((a - a.mean(axis=1, keepdims=True)) ** 2, axis=1)
    if np.any(ss_tot == 0):
        raise ZeroVariance("actual values have zero variance")
    ss_res = np.sum((a - p) ** 2, axis=1)
    return float(np.mean(1.0 - ss_res / ss_tot))


def mean_baseline_rmse(actual) -> float:
    """RMSE of always predicting the mean of ``actual`` (per output row)."""
    a = np.atleast_2d(np.asarray(actual, dtype=float))
    return rmse(np.broadcast_to(a.mean(axis=1, keepdims=True), a.shape), a)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, columns = predicted class

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(true_labels, predicted_labels, n_classes: int) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=int).ravel()
    p = np.asarray(predicted_labels, dtype=int).ravel()
    if t.shape != p.shape:
        raise DimensionMismatch("label arrays differ in length")
    if np.any((t < 0) | (t >= n_classes) | (p < 0) | (p >= n_classes)):
        raise ValueError("label out of range")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise EmptyInput("empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


def f1_macro(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise EmptyInput("empty confusion matrix")
    c = cm.counts.astype(float)
    tp = np.diag(c)
    pred = c.sum(axis=0)
    true = c.sum(axis=1)
    precision = np.divide(tp, pred, out=np.zeros_like(tp), where=pred > 0)
    recall = np.divide(tp, true, out=np.zeros_like(tp), where=true > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(f1.mean())


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    # Mann-Whitney form of the trapezoidal ROC area; ties count one half
    pos = scores[positive]
    neg = scores[~positive]
    order = np.sort(neg)
    below = np.searchsorted(order, pos, side="left")
    not_above = np.searchsorted(order, pos, side="right")
    wins = below + 0.5 * (not_above - below)
    return float(wins.sum() / (pos.size * neg.size))


def auc_macro(scores, true_labels) -> float:
    """One-vs-rest ROC AUC on raw scores (``groups x classes``), macro-averaged.

    Classes without both positives and negatives are skipped.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(true_labels, dtype=int).ravel()
    if s.ndim == 1:
        s = s.reshape(-1, 1)
    if s.shape[0] != y.shape[0]:
        raise DimensionMismatch("scores and labels differ in length")
    if y.size == 0:
        raise EmptyInput("nothing to score")
    if s.shape[1] == 1:
        # binary case: a single score column ranks the positive class (label 1)
        classes = [(s[:, 0], y == 1)]
    else:
        classes = [(s[:, k], y == k) for k in range(s.shape[1])]
    areas = [_binary_auc(col, pos) for col, pos in classes if pos.any() and (~pos).any()]
    if not areas:
        raise SingleClassOnly("no class has both positives and negatives")
    return float(np.mean(areas))


def classification_report(scores, predicted, true_labels, n_classes: int) -> dict[str, float]:
    cm = confusion(true_labels, predicted, n_classes)
    out = {"f1": f1_macro(cm), "accuracy": accuracy(cm)}
    try:
        out["auc"] = auc_macro(scores, true_labels)
    except SingleClassOnly:
        out["auc"] = float("nan")
    return out


def regression_report(predicted, actual) -> dict[str, float]:
    out = {"rmse": rmse(predicted, actual), "mae": mae(predicted, actual)}
    try:
        out["r2"] = r2(predicted, actual)
    except ZeroVariance:
        out["r2"] = float("nan")
    return out
