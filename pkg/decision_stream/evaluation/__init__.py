"""
Metrics, the p_lim sweep and model comparisons.
"""
from .baseline import baseline_tree
from .experiment import RESULT_COLUMNS, run_experiment
from .metrics import accuracy_error, metric_for, task_error, wape
from .tuning import DEFAULT_GRID, SweepResult, parse_grid, tune_plim

__all__ = [
    'accuracy_error', 'wape', 'metric_for', 'task_error',
    'DEFAULT_GRID', 'SweepResult', 'parse_grid', 'tune_plim',
    'baseline_tree', 'run_experiment', 'RESULT_COLUMNS',
]
