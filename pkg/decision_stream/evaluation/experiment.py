"""Side-by-side comparison of the stream, its merge-free ablation and the tree baseline."""
import logging
import time
from dataclasses import replace
from typing import List, Optional, Sequence

import pandas as pd

from ..config import settings
from ..data.dataset import Dataset, split_train_valid
from ..stream.graph import DsModel, model_summary, predict_batch
from ..training.ensembles import EnsembleConfig, predict_ensemble, train_ensemble
from ..training.trainer import TrainConfig, train
from .baseline import baseline_tree
from .metrics import metric_for, task_error
from .tuning import tune_plim

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["model", "metric", "error", "depth", "nodes", "leaves", "seconds"]


def _row(name: str, model: DsModel, test: Dataset, seconds: float) -> dict:
    summary = model_summary(model)
    return {
        "model": name,
        "metric": metric_for(model.task),
        "error": task_error(model.task, predict_batch(model, test), test.require_labels()),
        "depth": summary.depth,
        "nodes": summary.nodes,
        "leaves": summary.leaves,
        "seconds": seconds,
    }


def run_experiment(train_set: Dataset, test_set: Dataset, config: Optional[TrainConfig] = None,
                   baseline_depth: int = 5, ensemble: Optional[EnsembleConfig] = None,
                   grid: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """Results table with one row per compared model.

    With ``grid`` the stream's p_lim is first tuned on a validation split of
    ``train_set``.
    """
    config = config or TrainConfig()
    if grid:
        fit, valid = split_train_valid(train_set, settings.DS_VALID_FRACTION, config.seed)
        sweep = tune_plim(fit, valid, grid, config)
        config = replace(config, p_lim=sweep.best_p_lim)
        logger.info(f"Tuned p_lim={sweep.best_p_lim:g}")

    rows: List[dict] = []
    for name, variant in (("ds", config), ("ds_no_merge", replace(config, merge_enabled=False))):
        start = time.perf_counter()
        model, _ = train(train_set, variant)
        rows.append(_row(name, model, test_set, time.perf_counter() - start))

    start = time.perf_counter()
    tree = baseline_tree(train_set, baseline_depth, config.min_samples_split)
    rows.append(_row(f"tree_depth{baseline_depth}", tree, test_set, time.perf_counter() - start))

    if ensemble is not None:
        start = time.perf_counter()
        fitted = train_ensemble(train_set, replace(ensemble, base=config))
        seconds = time.perf_counter() - start
        summaries = [model_summary(member.model) for member in fitted.members]
        rows.append({
            "model": "ds_ensemble",
            "metric": metric_for(fitted.task),
            "error": task_error(fitted.task, predict_ensemble(fitted, test_set), test_set.require_labels()),
            "depth": max(s.depth for s in summaries),
            "nodes": sum(s.nodes for s in summaries),
            "leaves": sum(s.leaves for s in summaries),
            "seconds": seconds,
        })

    for row in rows:
        logger.info(f"{row['model']}: {row['metric']} error {row['error']:.4f}, depth {row['depth']}")
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)
