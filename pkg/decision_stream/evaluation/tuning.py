"""Validation sweep over the significance threshold."""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import pandas as pd

from ..data.dataset import Dataset
from ..exceptions import ConfigError
from ..stream.graph import predict_batch
from ..training.trainer import TrainConfig, train
from .metrics import task_error

logger = logging.getLogger(__name__)

DEFAULT_GRID = (1e-4, 5e-4, 1e-3, 5e-3, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5)


@dataclass(frozen=True)
class SweepResult:
    grid: Tuple[Tuple[float, float], ...]
    best_p_lim: float
    best_error: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.grid), columns=["p_lim", "error"])

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


def parse_grid(text: str) -> Tuple[float, ...]:
    try:
        grid = tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError as e:
        raise ConfigError(f"bad p_lim grid '{text}': {e}") from e
    validate_grid(grid)
    return grid


def validate_grid(grid: Sequence[float]) -> None:
    if not grid:
        raise ConfigError("p_lim grid is empty")
    outside = [p for p in grid if not 0.0 < p < 1.0]
    if outside:
        raise ConfigError(f"p_lim grid values must lie in (0, 1): {outside}")


def tune_plim(train_set: Dataset, valid_set: Dataset, grid: Sequence[float] = DEFAULT_GRID,
              base: Optional[TrainConfig] = None) -> SweepResult:
    """Train one model per grid value and keep the lowest validation error (ties: smaller p_lim)."""
    validate_grid(grid)
    base = base or TrainConfig()
    points = []
    for p_lim in grid:
        model, _ = train(train_set, replace(base, p_lim=p_lim))
        error = task_error(model.task, predict_batch(model, valid_set), valid_set.require_labels())
        points.append((float(p_lim), error))
        logger.info(f"p_lim={p_lim:g}: validation error {error:.4f} ({len(model.nodes)} nodes)")

    best_p_lim, best_error = min(points, key=lambda point: (point[1], point[0]))
    if len(points) > 1 and all(error == best_error for _, error in points):
        logger.warning("every p_lim in the grid gives the same validation error")
    return SweepResult(tuple(points), best_p_lim, best_error)
