"""Evaluation metrics.

Classification metrics assume -1/+1 labels. Predictions from raw scores
break ties upward: a score of exactly zero predicts +1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UndefinedMetricError


def predict_labels(scores: np.ndarray) -> np.ndarray:
    """Map decision values to -1/+1 labels; sign(0) is +1."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.where(scores >= 0.0, 1.0, -1.0)


def _check_label_pair(y_true, y_pred, binary: bool):
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.ndim != 1 or y_true.shape != y_pred.shape:
        raise InvalidInputError(
            f"label arrays must be 1-D and equal length, got {y_true.shape} and {y_pred.shape}"
        )
    if y_true.size == 0:
        raise InvalidInputError("empty label arrays")
    if binary:
        for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
            if not np.isin(arr, (-1.0, 1.0)).all():
                raise InvalidInputError(f"{name} must contain only -1 and +1")
    return y_true, y_pred


@dataclass(frozen=True)
class ConfusionRates:
    """Per-class rates plus the raw counts they came from."""

    tpr: float
    tnr: float
    fpr: float
    fnr: float
    tp: int
    tn: int
    fp: int
    fn: int


def confusion(y_true, y_pred) -> ConfusionRates:
    """Confusion rates for -1/+1 labels.

    Undefined (and an error) when either class is absent from y_true,
    since the corresponding rates have zero denominators.
    """
    y_true, y_pred = _check_label_pair(y_true, y_pred, binary=True)
    pos = y_true == 1.0
    neg = ~pos
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            "confusion rates need both classes present in y_true"
        )
    tp = int((y_pred[pos] == 1.0).sum())
    tn = int((y_pred[neg] == -1.0).sum())
    fn = n_pos - tp
    fp = n_neg - tn
    return ConfusionRates(
        tpr=tp / n_pos, tnr=tn / n_neg, fpr=fp / n_neg, fnr=fn / n_pos,
        tp=tp, tn=tn, fp=fp, fn=fn,
    )


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean of true-positive and true-negative rates.

    Insensitive to class imbalance by construction; errors when y_true
    holds a single class.
    """
    rates = confusion(y_true, y_pred)
    return 0.5 * (rates.tpr + rates.tnr)


def r_squared(y_true, y_pred) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot.

    Errors when y_true has zero variance, where the score is undefined.
    """
    y_true, y_pred = _check_label_pair(y_true, y_pred, binary=False)
    if not (np.isfinite(y_true).all() and np.isfinite(y_pred).all()):
        raise InvalidInputError("labels and predictions must be finite")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("r_squared undefined for constant y_true")
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot
