"""
Tail probabilities behind the two-sample tests.

The normal and Student-t tails come from scipy.special (erfc and the regularized
incomplete beta). The Kolmogorov tail is summed here because its truncation rule
is part of the test contract.
"""
import numpy as np
from scipy import special

SQRT2 = np.sqrt(2.0)

# Terms after the first of the Kolmogorov series below this are dropped
KS_SERIES_TOLERANCE = 1e-12
# Q(lambda) equals 1 to within the tolerance below this point
KS_LAMBDA_FLOOR = 0.18


def normal_two_sided_p(z):
    """2 * (1 - Phi(|z|)), evaluated through erfc to keep the tail accurate."""
    return special.erfc(np.abs(z) / SQRT2)


def student_t_two_sided_p(t, df):
    """Two-sided Student-t tail: I_{df / (df + t^2)}(df / 2, 1 / 2)."""
    t = np.asarray(t, dtype=np.float64)
    df = np.asarray(df, dtype=np.float64)
    return special.betainc(df / 2.0, 0.5, df / (df + t * t))


def kolmogorov_sf(lam):
    """Asymptotic Kolmogorov tail Q(lambda) = 2 * sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).

    Accepts scalars or arrays; the result is clamped to [0, 1].
    """
    lam = np.asarray(lam, dtype=np.float64)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    result = np.ones_like(lam)

    active = lam >= KS_LAMBDA_FLOOR
    if active.any():
        values = lam[active]
        smallest = values.min()
        last_k = int(np.ceil(np.sqrt(-np.log(KS_SERIES_TOLERANCE) / (2.0 * smallest * smallest)))) + 1
        k = np.arange(1, last_k + 1, dtype=np.float64)
        terms = np.exp(-2.0 * np.outer(values * values, k * k))
        # the leading term is never truncated
        tail = terms[:, 1:]
        tail[tail < KS_SERIES_TOLERANCE] = 0.0
        signs = np.where(k % 2 == 1, 1.0, -1.0)
        result[active] = 2.0 * (terms * signs).sum(axis=1)

    result = np.clip(result, 0.0, 1.0)
    return float(result[0]) if scalar else result
