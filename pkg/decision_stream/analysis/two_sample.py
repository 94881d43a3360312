"""
Two-sample tests and the similarity function used for splitting and merging.
"""
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np
import pandas as pd

from ..exceptions import DataError
from .special import kolmogorov_sf, normal_two_sided_p, student_t_two_sided_p

# Parametric family switches from t to Z above this size (both samples)
Z_TEST_MIN_SIZE = 30
# Nonparametric family switches from MWU to KS above this size (both samples)
KS_TEST_MIN_SIZE = 2
# MWU p-values are enumerated exactly up to this pooled size
MWU_EXACT_LIMIT = 16


class TestFamily(str, Enum):
    __test__ = False

    PARAMETRIC = "parametric"
    NONPARAMETRIC = "nonparametric"


class TestName(str, Enum):
    __test__ = False

    Z = "Z"
    STUDENT_T = "StudentT"
    KS = "KS"
    MWU = "MWU"


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    p_value: float
    test_used: TestName
    n1: int
    n2: int
    statistic: float


def _sample(values, minimum: int, test: TestName) -> np.ndarray:
    sample = np.asarray(values, dtype=np.float64).ravel()
    if len(sample) < minimum:
        raise DataError(f"{test.value} test needs at least {minimum} observations per sample, got {len(sample)}")
    if not np.isfinite(sample).all():
        raise DataError(f"{test.value} test got non-finite observations")
    return sample


def _is_constant(sample: np.ndarray) -> bool:
    return sample[0] == sample.min() == sample.max()


def _constant_report(test: TestName, a: np.ndarray, b: np.ndarray) -> TestReport:
    # Both samples constant: identical values are indistinguishable, different ones are not
    if a[0] == b[0]:
        return TestReport(1.0, test, len(a), len(b), 0.0)
    return TestReport(0.0, test, len(a), len(b), math.copysign(math.inf, a[0] - b[0]))


def _variances(a: np.ndarray, b: np.ndarray):
    var_a = 0.0 if _is_constant(a) else float(a.var(ddof=1))
    var_b = 0.0 if _is_constant(b) else float(b.var(ddof=1))
    return var_a, var_b


def z_test(a, b) -> TestReport:
    """Two-sided Z test for equal means with sample (n - 1) variances."""
    a = _sample(a, 2, TestName.Z)
    b = _sample(b, 2, TestName.Z)
    if _is_constant(a) and _is_constant(b):
        return _constant_report(TestName.Z, a, b)
    var_a, var_b = _variances(a, b)
    z = (a.mean() - b.mean()) / math.sqrt(var_a / len(a) + var_b / len(b))
    return TestReport(float(normal_two_sided_p(z)), TestName.Z, len(a), len(b), float(z))


def t_test(a, b) -> TestReport:
    """Two-sided Welch t test with Welch-Satterthwaite degrees of freedom."""
    a = _sample(a, 2, TestName.STUDENT_T)
    b = _sample(b, 2, TestName.STUDENT_T)
    if _is_constant(a) and _is_constant(b):
        return _constant_report(TestName.STUDENT_T, a, b)
    n1, n2 = len(a), len(b)
    var_a, var_b = _variances(a, b)
    se_a, se_b = var_a / n1, var_b / n2
    t = (a.mean() - b.mean()) / math.sqrt(se_a + se_b)
    df = (se_a + se_b) ** 2 / (se_a * se_a / (n1 - 1) + se_b * se_b / (n2 - 1))
    p = float(student_t_two_sided_p(t, df))
    return TestReport(min(max(p, 0.0), 1.0), TestName.STUDENT_T, n1, n2, float(t))


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    a = np.sort(a)
    b = np.sort(b)
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / len(a)
    cdf_b = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.abs(cdf_a - cdf_b).max())


def ks_test(a, b) -> TestReport:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = _sample(a, 1, TestName.KS)
    b = _sample(b, 1, TestName.KS)
    n1, n2 = len(a), len(b)
    d = ks_statistic(a, b)
    lam = d * math.sqrt(n1 * n2 / (n1 + n2))
    return TestReport(kolmogorov_sf(lam), TestName.KS, n1, n2, d)


def _doubled_midranks(pooled: np.ndarray) -> np.ndarray:
    ranks = pd.Series(pooled).rank(method="average").to_numpy()
    return np.rint(2.0 * ranks).astype(np.int64)


def mwu_test(a, b) -> TestReport:
    """Two-sided Mann-Whitney U test.

    Exact by enumerating every rank placement (mid-ranks for ties) when the
    pooled size is at most MWU_EXACT_LIMIT; otherwise the normal approximation
    with tie and continuity corrections.
    """
    a = _sample(a, 1, TestName.MWU)
    b = _sample(b, 1, TestName.MWU)
    n1, n2 = len(a), len(b)
    n = n1 + n2
    doubled = _doubled_midranks(np.concatenate([a, b]))

    # twice U1 and twice its null mean, so every comparison stays in integers
    u1_doubled = int(doubled[:n1].sum()) - n1 * (n1 + 1)
    centre = n1 * n2
    deviation = abs(u1_doubled - centre)
    statistic = u1_doubled / 2.0

    if n <= MWU_EXACT_LIMIT:
        extreme = 0
        total = 0
        offset = n1 * (n1 + 1)
        for placement in combinations(doubled.tolist(), n1):
            total += 1
            if abs(sum(placement) - offset - centre) >= deviation:
                extreme += 1
        return TestReport(extreme / total, TestName.MWU, n1, n2, statistic)

    _, tie_counts = np.unique(doubled, return_counts=True)
    tie_term = float((tie_counts ** 3 - tie_counts).sum()) / (n * (n - 1))
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if variance <= 0.0:
        return TestReport(1.0, TestName.MWU, n1, n2, statistic)
    z = max(deviation / 2.0 - 0.5, 0.0) / math.sqrt(variance)
    return TestReport(min(float(normal_two_sided_p(z)), 1.0), TestName.MWU, n1, n2, statistic)


def select_test(family: TestFamily, n1: int, n2: int) -> TestName:
    """Which test compares samples of these sizes under the family's rule."""
    smallest = min(n1, n2)
    if TestFamily(family) == TestFamily.PARAMETRIC:
        if smallest > Z_TEST_MIN_SIZE:
            return TestName.Z
        if smallest >= 2:
            return TestName.STUDENT_T
        # the t statistic is undefined for a single observation
        return TestName.MWU
    if smallest > KS_TEST_MIN_SIZE:
        return TestName.KS
    return TestName.MWU


_TESTS = {
    TestName.Z: z_test,
    TestName.STUDENT_T: t_test,
    TestName.KS: ks_test,
    TestName.MWU: mwu_test,
}


def similarity(labels_a, labels_b, family: TestFamily) -> TestReport:
    """Probability that two label samples share a distribution."""
    a = np.asarray(labels_a, dtype=np.float64).ravel()
    b = np.asarray(labels_b, dtype=np.float64).ravel()
    if len(a) == 0 or len(b) == 0:
        raise DataError("similarity needs two nonempty samples")
    return _TESTS[select_test(family, len(a), len(b))](a, b)
