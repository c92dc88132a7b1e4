"""Accuracy, precision, recall and F1 with the positive class as target."""

import logging
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..models import Metrics

logger = logging.getLogger(__name__)

POSITIVE = 1


def _ratio(numerator: int, denominator: int, name: str, warnings: list[str]) -> float:
    if denominator == 0:
        warnings.append(f"{name}: zero denominator")
        logger.warning("%s has a zero denominator; reporting 0", name)
        return 0.0
    return 100.0 * numerator / denominator


def compute_metrics(predictions: Sequence[int], gold: Sequence[int]) -> Metrics:
    """Percentages; a zero denominator yields 0 and a warning entry."""
    predicted = np.asarray(predictions)
    truth = np.asarray(gold)
    if predicted.shape != truth.shape:
        raise ValidationError(
            f"{predicted.shape[0]} predictions for {truth.shape[0]} gold labels",
            field="predictions",
            constraint="equal lengths",
        )
    if truth.size == 0:
        raise ValidationError("cannot score an empty prediction list", field="predictions")

    tp = int(np.count_nonzero((predicted == POSITIVE) & (truth == POSITIVE)))
    fp = int(np.count_nonzero((predicted == POSITIVE) & (truth != POSITIVE)))
    fn = int(np.count_nonzero((predicted != POSITIVE) & (truth == POSITIVE)))
    correct = int(np.count_nonzero(predicted == truth))

    warnings: list[str] = []
    precision = _ratio(tp, tp + fp, "precision", warnings)
    recall = _ratio(tp, tp + fn, "recall", warnings)
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return Metrics(
        accuracy=100.0 * correct / truth.size,
        precision=precision,
        recall=recall,
        f1=f1,
        warnings=tuple(warnings),
    )
