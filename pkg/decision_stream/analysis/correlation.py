"""Correlation strength between a feature and the label, on a common [0, 1] scale."""
import numpy as np

from ..exceptions import DataError


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) != len(y):
        raise DataError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise DataError("correlation needs at least 2 observations")
    return x, y


def _constant(values: np.ndarray) -> bool:
    return values.min() == values.max()


def r_squared(x, y) -> float:
    """Coefficient of determination of two continuous variables."""
    x, y = _pair(x, y)
    if _constant(x) or _constant(y):
        return 0.0
    dx = x - x.mean()
    dy = y - y.mean()
    sxy = float(dx @ dy)
    r2 = sxy * sxy / (float(dx @ dx) * float(dy @ dy))
    return min(max(r2, 0.0), 1.0)


def correlation_ratio(values, groups) -> float:
    """eta^2 of ``values`` grouped by the categorical codes in ``groups``."""
    groups, values = _pair(groups, values)
    if _constant(values):
        return 0.0
    _, inverse = np.unique(groups, return_inverse=True)
    counts = np.bincount(inverse).astype(np.float64)
    means = np.bincount(inverse, weights=values) / counts
    grand = values.mean()
    between = float((counts * (means - grand) ** 2).sum())
    total = float(((values - grand) ** 2).sum())
    if total == 0.0:
        return 0.0
    return min(max(between / total, 0.0), 1.0)


def correlation_strength(x, y, x_categorical: bool = False, y_categorical: bool = False) -> float:
    if x_categorical:
        return correlation_ratio(y, x)
    if y_categorical:
        return correlation_ratio(x, y)
    return r_squared(x, y)
