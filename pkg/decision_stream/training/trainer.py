"""
The split/merge training loop.

Every iteration splits each non-terminal leaf, merges the whole leaf set, and
measures the cross-node impurity; training stops at the first iteration that
fails to lower it.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..analysis.two_sample import TestFamily
from ..config import settings
from ..data.dataset import Dataset
from ..exceptions import ConfigError, DataError
from ..stream.builder import GrowingStream
from ..stream.graph import DsModel, DsNode, TaskKind
from .merging import CandidateFilter, merge_leaves
from .splitting import apply_split, plan_binary_split, scalable_split

logger = logging.getLogger(__name__)


class SplitMode(str, Enum):
    EXACT = "exact"
    SCALABLE = "scalable"


@dataclass(frozen=True)
class TrainConfig:
    p_lim: float = 0.05
    family: TestFamily = TestFamily.NONPARAMETRIC
    split_mode: SplitMode = SplitMode.EXACT
    merge_enabled: bool = True
    min_samples_split: int = 2
    impurity_tolerance: float = 1e-12
    max_iterations: Optional[int] = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "family", TestFamily(self.family))
            object.__setattr__(self, "split_mode", SplitMode(self.split_mode))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if not 0.0 < self.p_lim < 1.0:
            raise ConfigError(f"p_lim must lie in (0, 1), got {self.p_lim}")
        if self.min_samples_split < 2:
            raise ConfigError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.impurity_tolerance < 0.0:
            raise ConfigError("impurity_tolerance must be >= 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def snapshot(self) -> dict:
        """Settings stored with a trained model (thread count excluded)."""
        return {
            "p_lim": self.p_lim,
            "test_family": self.family.value,
            "split_mode": self.split_mode.value,
            "merge_enabled": self.merge_enabled,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    leaf_count_after_split: int
    leaf_count_after_merge: int
    impurity: float
    accepted: bool


@dataclass
class TrainTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "iteration": [r.iteration for r in self.records],
                "leaves_after_split": [r.leaf_count_after_split for r in self.records],
                "leaves_after_merge": [r.leaf_count_after_merge for r in self.records],
                "impurity": [r.impurity for r in self.records],
            }
        )

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


IterationCallback = Callable[[TraceRecord, DsModel], None]


def cross_node_impurity(leaves: Sequence[DsNode], task: TaskKind) -> float:
    """Sample-weighted Gini impurity (classification) or variance (regression) over leaves."""
    if not leaves:
        raise DataError("impurity of an empty leaf set")
    total = sum(leaf.sample_count for leaf in leaves)
    if total == 0:
        raise DataError("impurity of leaves holding no samples")
    return float(sum(leaf.sample_count * leaf.stats.impurity() for leaf in leaves) / total)


def _split_phase(stream: GrowingStream, active: List[DsNode], config: TrainConfig) -> None:
    splittable = []
    for leaf in active:
        if leaf.sample_count < config.min_samples_split:
            leaf.terminal = True
        else:
            splittable.append(leaf)

    if config.split_mode == SplitMode.SCALABLE:
        for leaf in splittable:
            if len(scalable_split(stream, leaf, config.p_lim, config.family)) <= 1:
                leaf.terminal = True
        return

    def plan(leaf: DsNode):
        return plan_binary_split(stream.dataset, leaf.sample_refs, config.family)

    if config.threads > 1 and len(splittable) > 1:
        plans = Parallel(n_jobs=config.threads, prefer="threads")(delayed(plan)(leaf) for leaf in splittable)
    else:
        plans = [plan(leaf) for leaf in splittable]

    for leaf, candidate in zip(splittable, plans):
        if candidate is None or not candidate.p_value < config.p_lim:
            leaf.terminal = True
        else:
            apply_split(stream, leaf, candidate)


def train(dataset: Dataset, config: Optional[TrainConfig] = None,
          on_iteration: Optional[IterationCallback] = None) -> Tuple[DsModel, TrainTrace]:
    """Grow a Decision Stream on a labeled dataset.

    ``on_iteration`` receives each iteration's trace record and a live view of the
    graph; it must not modify the graph.
    """
    config = config or TrainConfig()
    if dataset.row_count == 0:
        raise DataError("cannot train on an empty dataset")
    if dataset.n_features == 0:
        raise DataError("cannot train without features")
    dataset.require_labels()

    stream = GrowingStream(dataset)
    root = stream.new_node(np.arange(dataset.row_count))
    impurity = cross_node_impurity([root], stream.task)
    trace = TrainTrace()
    logger.info(
        f"Training on {dataset.row_count} rows x {dataset.n_features} features "
        f"(p_lim={config.p_lim}, {config.family.value}, {config.split_mode.value}, "
        f"merge={'on' if config.merge_enabled else 'off'})"
    )

    while True:
        active = sorted((leaf for leaf in stream.leaves() if not leaf.terminal), key=lambda n: n.id)
        if not active:
            break
        if config.max_iterations is not None and len(trace) >= config.max_iterations:
            logger.info(f"Stopping at the iteration cap of {config.max_iterations}")
            break

        _split_phase(stream, active, config)
        after_split = len(stream.leaves())
        if config.merge_enabled:
            merge_leaves(stream, sorted(stream.leaves(), key=lambda n: n.id), config.p_lim,
                         CandidateFilter.ALL, config.family)
        leaves = stream.leaves()
        current = cross_node_impurity(leaves, stream.task)
        record = TraceRecord(len(trace) + 1, after_split, len(leaves), current,
                             current < impurity - config.impurity_tolerance)
        trace.records.append(record)
        logger.info(
            f"Iteration {record.iteration}: {after_split} leaves after split, "
            f"{len(leaves)} after merge, impurity {current:.6f}"
        )

        if settings.DS_CHECK_INVARIANTS:
            stream.check(root.id)
        if on_iteration is not None:
            on_iteration(record, stream.snapshot(root.id, config.snapshot()))
        if not record.accepted:
            break
        impurity = current

    model = stream.freeze(root.id, config.snapshot())
    logger.info(f"Trained model with {len(model.nodes)} nodes and {len(model.leaves())} leaves")
    return model, trace
