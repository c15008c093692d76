"""Classification metrics."""

from __future__ import annotations

import numpy as np


def f1_macro(truth, predicted) -> float:
    """Unweighted mean of per-class F1 over the classes present in `truth`.

    A class with no true positives contributes 0.  Predicted labels outside
    the truth label set count as false positives of their own (ignored)
    class and false negatives of the true one.
    """
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise ValueError("truth and predicted must be 1-D sequences of equal length")
    if truth.size == 0:
        raise ValueError("truth must be non-empty")
    total = 0.0
    classes = np.unique(truth)
    for cls in classes:
        tp = np.sum((truth == cls) & (predicted == cls))
        fp = np.sum((truth != cls) & (predicted == cls))
        fn = np.sum((truth == cls) & (predicted != cls))
        denom = 2 * tp + fp + fn
        total += 2 * tp / denom if denom else 0.0
    return float(total / classes.size)


def accuracy(truth, predicted) -> float:
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise ValueError("truth and predicted must be 1-D sequences of equal length")
    return float(np.mean(truth == predicted))
