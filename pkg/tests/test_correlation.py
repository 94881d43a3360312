import numpy as np
import pytest

from decision_stream.analysis import correlation_ratio, correlation_strength, r_squared
from decision_stream.exceptions import DataError


def test_linear_relation_is_perfect():
    x = np.arange(10.0)
    assert r_squared(x, 2 * x + 1) == pytest.approx(1.0)


def test_r_squared_example():
    assert r_squared([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.64)


def test_category_determines_label():
    assert correlation_strength([0, 0, 1, 1], [0.0, 0.0, 1.0, 1.0], x_categorical=True) == pytest.approx(1.0)


def test_correlation_ratio_partial():
    # group means 1 and 3 around grand mean 2; within-group spread 1 per point
    values = [0.0, 2.0, 2.0, 4.0]
    groups = [0, 0, 1, 1]
    assert correlation_ratio(values, groups) == pytest.approx(0.5)


def test_constant_feature_has_no_strength():
    assert correlation_strength([5.0] * 6, [0, 1, 0, 1, 1, 0]) == 0.0
    assert correlation_strength([1, 1, 1], [0.0, 1.0, 2.0], x_categorical=True) == 0.0
    assert correlation_strength([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]) == 0.0


def test_categorical_label_uses_correlation_ratio():
    x = [0.0, 0.1, 5.0, 5.1]
    assert correlation_strength(x, [0, 0, 1, 1], y_categorical=True) == pytest.approx(
        correlation_ratio(x, [0, 0, 1, 1])
    )


def test_values_stay_in_unit_interval(rng):
    for _ in range(20):
        x = rng.normal(size=15)
        y = rng.normal(size=15)
        assert 0.0 <= r_squared(x, y) <= 1.0
        assert 0.0 <= correlation_ratio(y, rng.integers(0, 3, 15)) <= 1.0


def test_length_mismatch():
    with pytest.raises(DataError):
        r_squared([1.0, 2.0], [1.0])
