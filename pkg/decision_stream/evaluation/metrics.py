"""Error metrics, both reported as percentages."""
from typing import Tuple

import numpy as np

from ..exceptions import DataError
from ..stream.graph import TaskKind


def _pair(predictions, labels) -> Tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions).ravel()
    labels = np.asarray(labels).ravel()
    if len(predictions) != len(labels):
        raise DataError(f"{len(predictions)} predictions for {len(labels)} labels")
    if len(labels) == 0:
        raise DataError("cannot score an empty prediction set")
    return predictions, labels


def accuracy_error(predictions, labels) -> float:
    """Share of mismatched predictions, in percent."""
    predictions, labels = _pair(predictions, labels)
    return 100.0 * float(np.count_nonzero(predictions != labels)) / len(labels)


def wape(predictions, labels) -> float:
    """Weighted absolute percentage error: 100 * sum|y - f| / |sum y|."""
    predictions, labels = _pair(predictions, labels)
    predictions = predictions.astype(np.float64)
    labels = labels.astype(np.float64)
    denominator = abs(float(labels.sum()))
    if denominator == 0.0:
        raise DataError("WAPE is undefined when the labels sum to zero")
    return 100.0 * float(np.abs(labels - predictions).sum()) / denominator


def metric_for(task: TaskKind) -> str:
    return "accuracy" if TaskKind(task) == TaskKind.CLASSIFICATION else "wape"


def task_error(task: TaskKind, predictions, labels) -> float:
    if TaskKind(task) == TaskKind.CLASSIFICATION:
        return accuracy_error(predictions, labels)
    return wape(predictions, labels)
