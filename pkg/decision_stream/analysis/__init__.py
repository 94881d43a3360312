"""
Statistical tests and association measures.
"""
from .correlation import correlation_ratio, correlation_strength, r_squared
from .two_sample import (
    TestFamily,
    TestName,
    TestReport,
    ks_test,
    mwu_test,
    select_test,
    similarity,
    t_test,
    z_test,
)

__all__ = [
    'TestFamily', 'TestName', 'TestReport',
    'z_test', 't_test', 'ks_test', 'mwu_test', 'select_test', 'similarity',
    'correlation_strength', 'correlation_ratio', 'r_squared',
]
