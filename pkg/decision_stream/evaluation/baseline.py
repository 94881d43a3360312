"""
Depth-limited greedy decision tree used as a comparison baseline.

Splits minimize the summed child impurity (Gini for classes, squared error for
real labels) over the same binary candidates the exhaustive stream search uses.
The result is an ordinary single-parent DsModel.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from ..data.dataset import Dataset
from ..exceptions import ConfigError, DataError
from ..stream.builder import GrowingStream
from ..stream.graph import DsModel, DsNode
from ..stream.rules import OneVsRestRule, SplitRule, ThresholdRule

logger = logging.getLogger(__name__)

# Minimum impurity reduction for a split to count
MIN_GAIN = 1e-9


def _within_gini(counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Size-weighted Gini of each row of class counts: n - sum(c^2) / n."""
    return sizes - (counts.astype(np.float64) ** 2).sum(axis=1) / sizes


def _within_sse(sums: np.ndarray, squares: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    return np.maximum(squares - sums * sums / sizes, 0.0)


class _Scorer:
    def __init__(self, labels: np.ndarray, num_classes: Optional[int]):
        self.num_classes = num_classes
        if num_classes is not None:
            self.onehot = np.eye(num_classes, dtype=np.int64)[labels]
        else:
            centered = labels - labels.mean()
            self.values = np.stack([centered, centered * centered], axis=1)

    @property
    def columns(self) -> np.ndarray:
        return self.onehot if self.num_classes is not None else self.values

    def score(self, left: np.ndarray, total: np.ndarray, n1: np.ndarray, n: int) -> np.ndarray:
        n1 = n1.astype(np.float64)
        n2 = n - n1
        right = total - left
        if self.num_classes is not None:
            return _within_gini(left, n1) + _within_gini(right, n2)
        return _within_sse(left[:, 0], left[:, 1], n1) + _within_sse(right[:, 0], right[:, 1], n2)

    def parent(self, total: np.ndarray, n: int) -> float:
        if self.num_classes is not None:
            return float(_within_gini(total[None, :], np.array([float(n)]))[0])
        return float(_within_sse(total[None, 0], total[None, 1], np.array([float(n)]))[0])


def _best_rule(dataset: Dataset, refs: np.ndarray, scorer: _Scorer) -> Tuple[Optional[SplitRule], float]:
    columns = scorer.columns[refs]
    total = columns.sum(axis=0)
    n = len(refs)
    best_rule, best_score = None, np.inf
    for feature, descriptor in enumerate(dataset.schema.features):
        x = dataset.columns[feature][refs]
        if descriptor.kind.is_categorical:
            codes, groups = np.unique(x, return_inverse=True)
            if len(codes) < 2:
                continue
            left = np.zeros((len(codes), columns.shape[1]), dtype=columns.dtype)
            np.add.at(left, groups, columns)
            scores = scorer.score(left, total, np.bincount(groups), n)
            i = int(np.argmin(scores))
            candidate = OneVsRestRule(feature, int(codes[i]), tuple(int(c) for c in codes))
        else:
            order = np.argsort(x, kind="stable")
            xs = x[order]
            cuts = np.flatnonzero(xs[1:] != xs[:-1]) + 1
            if not len(cuts):
                continue
            prefix = np.cumsum(columns[order], axis=0)
            scores = scorer.score(prefix[cuts - 1], total, cuts, n)
            i = int(np.argmin(scores))
            candidate = ThresholdRule(feature, float(xs[cuts[i] - 1]))
        if scores[i] < best_score:
            best_rule, best_score = candidate, float(scores[i])
    return best_rule, best_score


def baseline_tree(dataset: Dataset, max_depth: int = 5, min_samples_split: int = 2) -> DsModel:
    if max_depth < 0:
        raise ConfigError(f"max_depth must be >= 0, got {max_depth}")
    if min_samples_split < 2:
        raise ConfigError(f"min_samples_split must be >= 2, got {min_samples_split}")
    if dataset.row_count == 0:
        raise DataError("cannot train on an empty dataset")

    stream = GrowingStream(dataset)
    scorer = _Scorer(stream.labels, stream.num_classes)
    root = stream.new_node(np.arange(dataset.row_count))
    frontier = [(root, 0)]
    while frontier:
        node, level = frontier.pop()
        if level >= max_depth or node.sample_count < min_samples_split:
            node.terminal = True
            continue
        refs = node.sample_refs
        rule, score = _best_rule(dataset, refs, scorer)
        parent = scorer.parent(scorer.columns[refs].sum(axis=0), len(refs))
        if rule is None or score > parent - MIN_GAIN:
            node.terminal = True
            continue
        left = rule.route_column(dataset.columns[rule.feature][refs]) == 0
        children = [stream.new_node(refs[left], (node.id,)), stream.new_node(refs[~left], (node.id,))]
        stream.attach(node, rule, children)
        frontier.extend((child, level + 1) for child in reversed(children))

    config = {"baseline": "greedy_tree", "max_depth": max_depth, "min_samples_split": min_samples_split}
    model = stream.freeze(root.id, config)
    logger.info(f"Baseline tree: {len(model.nodes)} nodes, {len(model.leaves())} leaves")
    return model
