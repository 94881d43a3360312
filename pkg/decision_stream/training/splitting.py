"""
Node splitting: exhaustive binary search and correlation-guided range splits.

The exhaustive search screens every candidate with vectorized prefix statistics,
then re-scores the candidates tied for the smallest p-value with the scalar
tests so the winner matches a one-by-one evaluation exactly.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..analysis.correlation import correlation_strength
from ..analysis.special import kolmogorov_sf, normal_two_sided_p, student_t_two_sided_p
from ..analysis.two_sample import KS_TEST_MIN_SIZE, Z_TEST_MIN_SIZE, TestFamily, similarity
from ..data.dataset import Dataset
from ..stream.builder import GrowingStream
from ..stream.graph import DsNode
from ..stream.rules import CategoryMapRule, OneVsRestRule, RangePartitionRule, SplitRule, ThresholdRule
from .merging import CandidateFilter, merge_leaves

logger = logging.getLogger(__name__)

# Histogram cells materialized at once by the KS screen
KS_BLOCK_CELLS = 1 << 22
# Relative slack when collecting candidates tied for the smallest screened p-value
TIE_SLACK = 1e-6
MAX_CONFIRMED = 256


@dataclass(frozen=True)
class CandidateSplit:
    rule: SplitRule
    parts: Tuple[np.ndarray, ...]
    p_value: float

    @property
    def key(self) -> Tuple[float, int, float]:
        return (self.p_value,) + rule_key(self.rule)


def rule_key(rule: SplitRule) -> Tuple[int, float]:
    if isinstance(rule, ThresholdRule):
        return rule.feature, rule.value
    return rule.feature, float(rule.category)


def _materialize(dataset: Dataset, refs: np.ndarray, labels: np.ndarray, rule: SplitRule,
                 family: TestFamily) -> CandidateSplit:
    left = rule.route_column(dataset.columns[rule.feature][refs]) == 0
    p = similarity(labels[left], labels[~left], family).p_value
    return CandidateSplit(rule, (refs[left], refs[~left]), p)


def _candidate_rules(dataset: Dataset, refs: np.ndarray) -> List[SplitRule]:
    rules: List[SplitRule] = []
    for feature, descriptor in enumerate(dataset.schema.features):
        x = dataset.columns[feature][refs]
        present = np.unique(x)
        if len(present) < 2:
            continue
        if descriptor.kind.is_categorical:
            observed = tuple(int(c) for c in present)
            rules.extend(OneVsRestRule(feature, code, observed) for code in observed)
        else:
            rules.extend(ThresholdRule(feature, float(v)) for v in present[:-1])
    return rules


def enumerate_candidate_splits(node: DsNode, dataset: Dataset,
                               family: TestFamily = TestFamily.NONPARAMETRIC) -> List[CandidateSplit]:
    """Every binary split of the node's rows, each scored with the scalar tests."""
    refs = node.sample_refs
    labels = dataset.require_labels()[refs]
    return [_materialize(dataset, refs, labels, rule, family) for rule in _candidate_rules(dataset, refs)]


# Vectorized screening

def _parametric_p(n1, n2, s1, q1, s2, q2, const1, const2, val1, val2) -> np.ndarray:
    """Z / Welch-t p-values from per-side sums of centered labels and their squares."""
    n1 = n1.astype(np.float64)
    n2 = n2.astype(np.float64)
    mean1 = s1 / n1
    mean2 = s2 / n2
    with np.errstate(divide="ignore", invalid="ignore"):
        var1 = np.where(const1, 0.0, np.maximum(q1 - s1 * mean1, 0.0) / (n1 - 1.0))
        var2 = np.where(const2, 0.0, np.maximum(q2 - s2 * mean2, 0.0) / (n2 - 1.0))
        se1 = var1 / n1
        se2 = var2 / n2
        se = se1 + se2
        stat = (mean1 - mean2) / np.sqrt(se)
        df = se * se / (se1 * se1 / (n1 - 1.0) + se2 * se2 / (n2 - 1.0))
        p_t = student_t_two_sided_p(stat, df)
    p_z = normal_two_sided_p(stat)
    p = np.where(np.minimum(n1, n2) > Z_TEST_MIN_SIZE, p_z, p_t)
    degenerate = se <= 0.0
    p = np.where(degenerate, np.where(mean1 == mean2, 1.0, 0.0), p)
    p = np.where(const1 & const2, np.where(val1 == val2, 1.0, 0.0), p)
    return np.clip(np.nan_to_num(p, nan=1.0), 0.0, 1.0)


def _ks_p(left_counts: np.ndarray, total: np.ndarray, n1: np.ndarray, n: int) -> np.ndarray:
    n1 = n1.astype(np.float64)
    n2 = n - n1
    left_cdf = np.cumsum(left_counts, axis=1) / n1[:, None]
    right_cdf = np.cumsum(total - left_counts, axis=1) / n2[:, None]
    d = np.abs(left_cdf - right_cdf).max(axis=1)
    return np.atleast_1d(kolmogorov_sf(d * np.sqrt(n1 * n2 / (n1 + n2))))


def _ks_prefix_p(ranks: np.ndarray, m: int, cuts: np.ndarray) -> np.ndarray:
    """KS p-values of ranks[:c] against ranks[c:] for every (ascending) cut c."""
    n = len(ranks)
    total = np.bincount(ranks, minlength=m)
    p = np.empty(len(cuts))
    block = max(1, KS_BLOCK_CELLS // m)
    running = np.zeros(m, dtype=np.int64)
    for start in range(0, n, block):
        stop = min(start + block, n)
        onehot = np.zeros((stop - start, m), dtype=np.int64)
        onehot[np.arange(stop - start), ranks[start:stop]] = 1
        prefix = running + np.cumsum(onehot, axis=0)
        running = prefix[-1]
        lo, hi = np.searchsorted(cuts, [start + 1, stop + 1])
        if hi > lo:
            selected = cuts[lo:hi]
            p[lo:hi] = _ks_p(prefix[selected - 1 - start], total, selected, n)
    return p


def _ks_group_p(ranks: np.ndarray, m: int, groups: np.ndarray, k: int) -> np.ndarray:
    """KS p-values of each group against the rest of the node."""
    n = len(ranks)
    total = np.bincount(ranks, minlength=m)
    sizes = np.bincount(groups, minlength=k)
    p = np.empty(k)
    block = max(1, KS_BLOCK_CELLS // m)
    for lo in range(0, k, block):
        hi = min(lo + block, k)
        inside = (groups >= lo) & (groups < hi)
        counts = np.zeros((hi - lo, m), dtype=np.int64)
        np.add.at(counts, (groups[inside] - lo, ranks[inside]), 1)
        p[lo:hi] = _ks_p(counts, total, sizes[lo:hi], n)
    return p


def _needs_scalar(n1: np.ndarray, n2: np.ndarray, family: TestFamily) -> np.ndarray:
    smallest = np.minimum(n1, n2)
    if family == TestFamily.PARAMETRIC:
        return smallest < 2
    return smallest <= KS_TEST_MIN_SIZE


def _screen_threshold(x: np.ndarray, y: np.ndarray, ranks: np.ndarray, m: int,
                      family: TestFamily) -> Tuple[np.ndarray, np.ndarray]:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    cuts = np.flatnonzero(xs[1:] != xs[:-1]) + 1
    if not len(cuts):
        return np.empty(0), np.empty(0)
    n1, n2 = cuts, n - cuts
    p = np.empty(len(cuts))
    scalar = _needs_scalar(n1, n2, family)
    vector = ~scalar
    if vector.any():
        if family == TestFamily.PARAMETRIC:
            centered = ys - ys.mean()
            s = np.cumsum(centered)
            q = np.cumsum(centered * centered)
            low = np.minimum.accumulate(ys)
            high = np.maximum.accumulate(ys)
            suffix_low = np.minimum.accumulate(ys[::-1])[::-1]
            suffix_high = np.maximum.accumulate(ys[::-1])[::-1]
            c = cuts[vector]
            p[vector] = _parametric_p(
                c, n - c, s[c - 1], q[c - 1], s[-1] - s[c - 1], q[-1] - q[c - 1],
                low[c - 1] == high[c - 1], suffix_low[c] == suffix_high[c], ys[0], ys[c],
            )
        else:
            p[vector] = _ks_prefix_p(ranks[order], m, cuts[vector])
    for j in np.flatnonzero(scalar):
        p[j] = similarity(ys[:cuts[j]], ys[cuts[j]:], family).p_value
    return xs[cuts - 1], p


def _excluding_self(values: np.ndarray, reduce, fill: float) -> np.ndarray:
    """reduce over every element except the one at each position."""
    padded = np.full(1, fill)
    before = np.concatenate([padded, reduce.accumulate(values)[:-1]])
    after = np.concatenate([reduce.accumulate(values[::-1])[::-1][1:], padded])
    return reduce(before, after)


def _screen_category(x: np.ndarray, y: np.ndarray, ranks: np.ndarray, m: int,
                     family: TestFamily) -> Tuple[np.ndarray, np.ndarray]:
    codes, groups = np.unique(x, return_inverse=True)
    k = len(codes)
    if k < 2:
        return np.empty(0), np.empty(0)
    n = len(y)
    n1 = np.bincount(groups, minlength=k)
    n2 = n - n1
    p = np.empty(k)
    scalar = _needs_scalar(n1, n2, family)
    vector = ~scalar
    if vector.any():
        if family == TestFamily.PARAMETRIC:
            centered = y - y.mean()
            s1 = np.bincount(groups, weights=centered, minlength=k)
            q1 = np.bincount(groups, weights=centered * centered, minlength=k)
            low = np.full(k, np.inf)
            high = np.full(k, -np.inf)
            np.minimum.at(low, groups, y)
            np.maximum.at(high, groups, y)
            rest_low = _excluding_self(low, np.minimum, np.inf)
            rest_high = _excluding_self(high, np.maximum, -np.inf)
            screened = _parametric_p(
                n1, n2, s1, q1, centered.sum() - s1, (centered * centered).sum() - q1,
                low == high, rest_low == rest_high, low, rest_low,
            )
        else:
            screened = _ks_group_p(ranks, m, groups, k)
        p[vector] = screened[vector]
    for j in np.flatnonzero(scalar):
        left = groups == j
        p[j] = similarity(y[left], y[~left], family).p_value
    return codes, p


def plan_binary_split(dataset: Dataset, refs: np.ndarray,
                      family: TestFamily = TestFamily.NONPARAMETRIC) -> Optional[CandidateSplit]:
    """Lowest-p binary split of the given rows (ties: lower feature, then lower value/code)."""
    family = TestFamily(family)
    labels = dataset.require_labels()[refs]
    if len(refs) < 2:
        return None
    y = labels.astype(np.float64)
    _, ranks = np.unique(y, return_inverse=True)
    m = int(ranks.max()) + 1

    features, values, scores = [], [], []
    for feature, descriptor in enumerate(dataset.schema.features):
        x = dataset.columns[feature][refs]
        if descriptor.kind.is_categorical:
            keys, p = _screen_category(x, y, ranks, m, family)
        else:
            keys, p = _screen_threshold(x, y, ranks, m, family)
        if len(keys):
            features.append(np.full(len(keys), feature))
            values.append(keys)
            scores.append(p)
    if not features:
        return None

    features = np.concatenate(features)
    values = np.concatenate(values)
    scores = np.concatenate(scores)
    best = scores.min()
    near = np.flatnonzero(scores <= best * (1.0 + TIE_SLACK))
    near = near[np.lexsort((values[near], features[near]))][:MAX_CONFIRMED]

    chosen: Optional[CandidateSplit] = None
    for i in near:
        feature = int(features[i])
        descriptor = dataset.schema.features[feature]
        if descriptor.kind.is_categorical:
            observed = tuple(int(c) for c in np.unique(dataset.columns[feature][refs]))
            rule = OneVsRestRule(feature, int(values[i]), observed)
        else:
            rule = ThresholdRule(feature, float(values[i]))
        candidate = _materialize(dataset, refs, labels, rule, family)
        if chosen is None or candidate.key < chosen.key:
            chosen = candidate
    return chosen


def apply_split(stream: GrowingStream, node: DsNode, candidate: CandidateSplit) -> List[DsNode]:
    children = [stream.new_node(part, (node.id,)) for part in candidate.parts]
    stream.attach(node, candidate.rule, children)
    return children


def best_binary_split(stream: GrowingStream, node: DsNode, p_lim: float,
                      family: TestFamily = TestFamily.NONPARAMETRIC) -> List[DsNode]:
    """Split ``node`` in two when its best candidate has p < p_lim; otherwise return []."""
    candidate = plan_binary_split(stream.dataset, node.sample_refs, family)
    if candidate is None or not candidate.p_value < p_lim:
        return []
    logger.debug(f"node {node.id}: {candidate.rule} p={candidate.p_value:.3g}")
    return apply_split(stream, node, candidate)


# Correlation-guided range splits

def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def choose_feature(dataset: Dataset, refs: np.ndarray, labels: np.ndarray) -> int:
    """Feature most strongly associated with the label (ties: lowest index)."""
    classification = dataset.is_classification
    strengths = [
        correlation_strength(dataset.columns[f][refs], labels, descriptor.kind.is_categorical, classification)
        for f, descriptor in enumerate(dataset.schema.features)
    ]
    return int(np.argmax(strengths))


def range_cuts(sorted_values: np.ndarray) -> np.ndarray:
    """Cut positions of round(sqrt(n)) near-equal ranges, moved forward past ties.

    Leading ranges take one extra sample each when n does not divide evenly.
    """
    n = len(sorted_values)
    k = _round_half_up(math.sqrt(n))
    if k < 2:
        return np.empty(0, dtype=np.int64)
    base, extra = divmod(n, k)
    sizes = np.full(k, base, dtype=np.int64)
    sizes[:extra] += 1
    nominal = np.cumsum(sizes)[:-1]
    cuts = np.searchsorted(sorted_values, sorted_values[nominal - 1], side="right")
    cuts = np.unique(cuts)
    return cuts[cuts < n]


def _owners(parts: List[np.ndarray], leaves: List[DsNode]) -> np.ndarray:
    """Index into ``leaves`` of the leaf that absorbed each initial part."""
    representatives = np.array([part[0] for part in parts])
    owner = np.full(len(parts), -1, dtype=np.int64)
    for i, leaf in enumerate(leaves):
        owner[np.isin(representatives, leaf.sample_refs)] = i
    return owner


def _discard_all(stream: GrowingStream, leaves: List[DsNode]) -> None:
    for leaf in leaves:
        stream.discard(leaf.id)


def scalable_split(stream: GrowingStream, node: DsNode, p_lim: float,
                   family: TestFamily = TestFamily.NONPARAMETRIC) -> List[DsNode]:
    dataset = stream.dataset
    refs = node.sample_refs
    if len(refs) < 2:
        return []
    labels = stream.node_labels(node)
    feature = choose_feature(dataset, refs, labels)
    x = dataset.columns[feature][refs]

    if dataset.schema.features[feature].kind.is_categorical:
        codes, groups = np.unique(x, return_inverse=True)
        if len(codes) < 2:
            return []
        parts = [refs[groups == g] for g in range(len(codes))]
        leaves = [stream.new_node(part, (node.id,)) for part in parts]
    else:
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cuts = range_cuts(xs)
        if not len(cuts):
            return []
        edges = np.concatenate([[0], cuts, [len(xs)]])
        bounds = [-np.inf] + [float(xs[c]) for c in cuts] + [np.inf]
        parts = [np.sort(refs[order[edges[i]:edges[i + 1]]]) for i in range(len(edges) - 1)]
        leaves = []
        for i, part in enumerate(parts):
            leaf = stream.new_node(part, (node.id,))
            leaf.value_range = (bounds[i], bounds[i + 1])
            leaves.append(leaf)
        while True:
            before = len(leaves)
            leaves = merge_leaves(stream, leaves, p_lim, CandidateFilter.ADJACENT_RANGES, family)
            if len(leaves) >= before:
                break

    leaves = merge_leaves(stream, leaves, p_lim, CandidateFilter.ALL, family)
    if len(leaves) < 2:
        _discard_all(stream, leaves)
        return []

    owner = _owners(parts, leaves)
    if dataset.schema.features[feature].kind.is_categorical:
        # slots ordered by the lowest code each leaf holds
        slot_of = {}
        for leaf_index in owner:
            slot_of.setdefault(int(leaf_index), len(slot_of))
        mapping = {int(code): slot_of[int(owner[g])] for g, code in enumerate(codes)}
        children = [leaves[i] for i in sorted(slot_of, key=slot_of.get)]
        rule = CategoryMapRule.from_dict_mapping(feature, mapping)
    else:
        # consecutive ranges owned by the same leaf collapse into one interval
        starts = [0] + [i for i in range(1, len(parts)) if owner[i] != owner[i - 1]]
        rule = RangePartitionRule(feature, tuple(bounds[i] for i in starts[1:]))
        children = [leaves[owner[i]] for i in starts]

    for leaf in leaves:
        leaf.value_range = None
    stream.attach(node, rule, children)
    logger.debug(f"node {node.id}: {rule.kind.value} on feature {feature} into {len(leaves)} leaves")
    return leaves
