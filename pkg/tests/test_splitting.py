"""
Exhaustive binary splits against a brute-force search, and correlation-guided range splits.
"""
import numpy as np
import pytest

from decision_stream.analysis import TestFamily, similarity
from decision_stream.stream import CategoryMapRule, GrowingStream, OneVsRestRule, RangePartitionRule, ThresholdRule
from decision_stream.training.splitting import (
    best_binary_split,
    enumerate_candidate_splits,
    plan_binary_split,
    range_cuts,
    scalable_split,
)

from conftest import build_dataset, random_dataset


def brute_force_best(dataset, family):
    """(p, feature, value, rule) minimum over every binary split, scored one at a time."""
    labels = dataset.labels
    best = None
    for feature, descriptor in enumerate(dataset.schema.features):
        x = dataset.columns[feature]
        present = np.unique(x)
        if len(present) < 2:
            continue
        if descriptor.kind.is_categorical:
            candidates = [(float(c), OneVsRestRule(feature, int(c), tuple(int(v) for v in present)), x == c)
                          for c in present]
        else:
            candidates = [(float(v), ThresholdRule(feature, float(v)), x <= v) for v in present[:-1]]
        for value, rule, left in candidates:
            p = similarity(labels[left], labels[~left], family).p_value
            if best is None or (p, feature, value) < best[:3]:
                best = (p, feature, value, rule)
    return best


def root_of(dataset):
    stream = GrowingStream(dataset)
    return stream, stream.new_node(np.arange(dataset.row_count))


@pytest.mark.parametrize("family", [TestFamily.NONPARAMETRIC, TestFamily.PARAMETRIC])
def test_matches_brute_force_search(family):
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n_rows = int(rng.integers(2, 13))
        dataset = random_dataset(rng, n_rows, int(rng.integers(1, 4)), classification=rng.random() < 0.5,
                                 num_classes=int(rng.integers(2, 4)))
        expected = brute_force_best(dataset, family)
        planned = plan_binary_split(dataset, np.arange(n_rows), family)
        if expected is None:
            assert planned is None
            continue
        assert planned.rule == expected[3]
        assert planned.p_value == expected[0]


def test_matches_brute_force_on_larger_nodes():
    rng = np.random.default_rng(7)
    for family in TestFamily:
        for _ in range(10):
            dataset = random_dataset(rng, 80, 3, classification=False)
            expected = brute_force_best(dataset, family)
            planned = plan_binary_split(dataset, np.arange(80), family)
            assert planned.rule == expected[3]
            assert planned.p_value == pytest.approx(expected[0], rel=1e-9)


def test_candidate_enumeration():
    dataset = build_dataset(
        [("x", "continuous", [1.0, 2.0, 3.0, 3.0]), ("c", 3, [0, 1, 2, 0]), ("k", "continuous", [5.0] * 4)],
        [0, 1, 0, 1],
        num_classes=2,
    )
    _, root = root_of(dataset)
    rules = [candidate.rule for candidate in enumerate_candidate_splits(root, dataset)]
    assert rules[:2] == [ThresholdRule(0, 1.0), ThresholdRule(0, 2.0)]
    assert [rule.category for rule in rules[2:]] == [0, 1, 2]
    assert all(rule.feature != 2 for rule in rules)


def test_toy_split(toy):
    stream, root = root_of(toy)
    children = best_binary_split(stream, root, 0.5)
    assert root.rule == ThresholdRule(0, 2.0)
    assert [child.sample_refs.tolist() for child in children] == [[0, 1], [2, 3]]
    assert [child.prediction for child in children] == [0, 1]
    assert all(child.parents == {root.id} for child in children)


def test_p_lim_gates_the_split(toy):
    assert plan_binary_split(toy, np.arange(4)).p_value == pytest.approx(1 / 3)
    stream, root = root_of(toy)
    assert best_binary_split(stream, root, 0.3) == []
    assert root.is_leaf and len(stream.nodes) == 1


def test_clean_step_beats_near_misses():
    x = np.arange(60.0)
    dataset = build_dataset([("x", "continuous", x)], np.where(x >= 30, 10.0, 0.0))
    candidate = plan_binary_split(dataset, np.arange(60))
    assert candidate.rule == ThresholdRule(0, 29.0)
    assert candidate.p_value > 0.0


def test_uniform_labels_never_split():
    dataset = build_dataset([("x", "continuous", np.arange(10.0))], [1] * 10, num_classes=2)
    stream, root = root_of(dataset)
    assert best_binary_split(stream, root, 0.05) == []


def test_single_row_has_no_split(toy):
    assert plan_binary_split(toy, np.array([2])) is None


@pytest.mark.parametrize("values, cuts", [
    (np.arange(9.0), [3, 6]),
    (np.array([1, 1, 1, 1, 2, 2, 3, 3, 3], dtype=float), [4, 6]),
    (np.arange(10.0), [4, 7]),
    (np.arange(3.0), [2]),
    (np.arange(2.0), []),
    (np.ones(9), []),
])
def test_range_cuts(values, cuts):
    assert range_cuts(values).tolist() == cuts


def test_scalable_split_orders_ranges_by_value(rng):
    x = np.arange(100.0)
    dataset = build_dataset([("noise", "continuous", rng.normal(size=100)), ("x", "continuous", x)], x)
    stream, root = root_of(dataset)
    leaves = scalable_split(stream, root, 0.01, TestFamily.PARAMETRIC)

    assert len(leaves) >= 2
    assert isinstance(root.rule, RangePartitionRule) and root.rule.feature == 1
    means = [stream.nodes[child].prediction for child in root.children]
    assert all(a < b for a, b in zip(means, means[1:]))
    assert sum(leaf.sample_count for leaf in leaves) == 100
    assert all(leaf.value_range is None for leaf in leaves)


def test_scalable_split_groups_categories():
    codes = np.repeat([0, 1, 2, 3], 15)
    dataset = build_dataset([("c", 4, codes)], codes % 2, num_classes=2)
    stream, root = root_of(dataset)
    leaves = scalable_split(stream, root, 0.05)

    assert len(leaves) == 2
    assert root.rule == CategoryMapRule(0, ((0, 0), (1, 1), (2, 0), (3, 1)))
    assert [stream.nodes[child].prediction for child in root.children] == [0, 1]


def test_scalable_split_gives_up_when_everything_merges():
    codes = np.repeat([0, 1, 2, 3], 10)
    dataset = build_dataset([("c", 4, codes)], np.zeros(40, dtype=int), num_classes=2)
    stream, root = root_of(dataset)
    assert scalable_split(stream, root, 0.05) == []
    assert root.is_leaf
    assert list(stream.nodes) == [root.id]
