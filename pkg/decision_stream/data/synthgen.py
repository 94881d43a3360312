"""
Synthetic benchmark data: binary, categorical and continuous features with a
linear latent score behind the label.

Rows are generated in fixed-size blocks, each from its own derived seed, so the
output does not depend on how many threads produce it.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed

from ..exceptions import ConfigError
from ..stream.graph import TaskKind
from .dataset import Dataset
from .schema import FeatureDescriptor, FeatureKind, LabelDescriptor, Schema

logger = logging.getLogger(__name__)

BLOCK_ROWS = 4096


@dataclass(frozen=True)
class SynthConfig:
    n_samples: int
    task: TaskKind = TaskKind.CLASSIFICATION
    seed: int = 0
    noise_std: float = 0.1
    num_classes: int = 2
    n_binary: int = 125
    n_categorical: int = 125
    n_continuous: int = 250
    n_categories: int = 20
    threads: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "task", TaskKind(self.task))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.noise_std < 0.0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if min(self.n_binary, self.n_categorical, self.n_continuous) < 0:
            raise ConfigError("feature counts must be >= 0")
        if self.n_binary + self.n_categorical + self.n_continuous == 0:
            raise ConfigError("at least one feature is required")
        if self.n_categories < 2:
            raise ConfigError(f"n_categories must be >= 2, got {self.n_categories}")

    @property
    def n_features(self) -> int:
        return self.n_binary + self.n_categorical + self.n_continuous


def synth_schema(config: SynthConfig) -> Schema:
    binary = tuple(str(i) for i in range(2))
    categories = tuple(str(i) for i in range(config.n_categories))
    features = (
        [FeatureDescriptor(f"b{i}", FeatureKind.binary(), binary) for i in range(config.n_binary)]
        + [FeatureDescriptor(f"c{i}", FeatureKind.categorical(config.n_categories), categories)
           for i in range(config.n_categorical)]
        + [FeatureDescriptor(f"x{i}", FeatureKind.continuous()) for i in range(config.n_continuous)]
    )
    if config.task == TaskKind.CLASSIFICATION:
        label = LabelDescriptor("y", config.num_classes, tuple(str(i) for i in range(config.num_classes)))
    else:
        label = LabelDescriptor("y")
    return Schema(tuple(features), label)


def _block(config: SynthConfig, index: int, rows: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng([config.seed, 1, index])
    binary = rng.integers(0, 2, (rows, config.n_binary), dtype=np.int32)
    categorical = rng.integers(0, config.n_categories, (rows, config.n_categorical), dtype=np.int32)
    continuous = rng.random((rows, config.n_continuous))
    return binary, categorical, continuous


def generate(config: SynthConfig) -> Dataset:
    weights_rng = np.random.default_rng([config.seed, 0])
    w_binary = weights_rng.standard_normal(config.n_binary)
    w_categorical = weights_rng.standard_normal(config.n_categorical)
    effects = weights_rng.standard_normal((config.n_categorical, config.n_categories))
    w_continuous = weights_rng.standard_normal(config.n_continuous)

    sizes = [min(BLOCK_ROWS, config.n_samples - start) for start in range(0, config.n_samples, BLOCK_ROWS)]
    if config.threads > 1 and len(sizes) > 1:
        blocks = Parallel(n_jobs=config.threads, prefer="threads")(
            delayed(_block)(config, i, rows) for i, rows in enumerate(sizes)
        )
    else:
        blocks = [_block(config, i, rows) for i, rows in enumerate(sizes)]
    binary = np.concatenate([b[0] for b in blocks])
    categorical = np.concatenate([b[1] for b in blocks])
    continuous = np.concatenate([b[2] for b in blocks])

    score = binary @ w_binary + continuous @ w_continuous
    if config.n_categorical:
        columns = np.arange(config.n_categorical)
        score = score + (effects[columns, categorical] * w_categorical).sum(axis=1)

    if config.task == TaskKind.CLASSIFICATION:
        quantiles = np.arange(1, config.num_classes) / config.num_classes
        thresholds = np.quantile(score, quantiles)
        # class c holds scores above c thresholds
        labels = np.searchsorted(thresholds, score, side="left")
    else:
        noise = np.concatenate([
            np.random.default_rng([config.seed, 2, i]).standard_normal(rows) for i, rows in enumerate(sizes)
        ])
        labels = score + noise * config.noise_std * float(score.std())

    columns = (
        [binary[:, i] for i in range(config.n_binary)]
        + [categorical[:, i] for i in range(config.n_categorical)]
        + [continuous[:, i] for i in range(config.n_continuous)]
    )
    dataset = Dataset.from_arrays(synth_schema(config), columns, labels)
    logger.info(f"Generated {config.n_samples} {config.task.value} rows with {config.n_features} features")
    return dataset
