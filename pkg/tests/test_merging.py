"""
Leaf merging on hand-made growing streams.
"""
import numpy as np
import pytest

from decision_stream.analysis import TestFamily
from decision_stream.exceptions import ConfigError, InvariantViolation
from decision_stream.stream import GrowingStream, ThresholdRule
from decision_stream.training import CandidateFilter, merge_leaves, merge_pair

from conftest import build_dataset


def stream_for(labels, num_classes=None):
    labels = np.asarray(labels)
    dataset = build_dataset([("x", "continuous", np.zeros(len(labels)))], labels, num_classes)
    return GrowingStream(dataset)


def blocks(stream, sizes):
    """Parentless leaves over consecutive row blocks."""
    leaves, start = [], 0
    for size in sizes:
        leaves.append(stream.new_node(np.arange(start, start + size)))
        start += size
    return leaves


def test_merge_pair_unites_parents_and_samples():
    stream = stream_for([0, 0, 0, 1, 1, 1, 1, 1], num_classes=2)
    p1 = stream.new_node(np.arange(3))
    p2 = stream.new_node(np.arange(3, 8))
    a = stream.new_node(np.arange(3), (p1.id,))
    b = stream.new_node(np.arange(3, 8), (p2.id,))
    p1.children = [a.id]
    p2.children = [b.id]

    merged = merge_pair(stream, a, b)
    assert merged.parents == {p1.id, p2.id}
    assert merged.sample_count == 8
    assert merged.sample_refs.tolist() == list(range(8))
    assert not merged.terminal
    assert p1.children == [merged.id] and p2.children == [merged.id]
    assert a.id not in stream.nodes and b.id not in stream.nodes


def test_identical_leaves_merge():
    stream = stream_for([0] * 20, num_classes=2)
    assert len(merge_leaves(stream, blocks(stream, [10, 10]), 0.05)) == 1


def test_separated_leaves_stay_apart():
    stream = stream_for([0] * 40 + [1] * 40, num_classes=2)
    leaves = blocks(stream, [40, 40])
    assert merge_leaves(stream, leaves, 0.05) == leaves


def test_adjacency_filter_only_pairs_neighbouring_ranges():
    labels = [0] * 20 + [1] * 20 + [0] * 20

    stream = stream_for(labels, num_classes=2)
    leaves = blocks(stream, [20, 20, 20])
    for i, leaf in enumerate(leaves):
        leaf.value_range = (float(i), float(i + 1))
    assert len(merge_leaves(stream, leaves, 0.05, CandidateFilter.ADJACENT_RANGES)) == 3

    stream = stream_for(labels, num_classes=2)
    first, middle, last = blocks(stream, [20, 20, 20])
    result = merge_leaves(stream, [first, middle, last], 0.05, CandidateFilter.ALL)
    assert len(result) == 2
    assert middle in result


def test_adjacent_merge_fuses_ranges():
    stream = stream_for([0] * 30, num_classes=2)
    leaves = blocks(stream, [10, 10, 10])
    for i, leaf in enumerate(leaves):
        leaf.value_range = (float(i), float(i + 1))
    result = merge_leaves(stream, leaves, 0.05, CandidateFilter.ADJACENT_RANGES)
    assert len(result) == 1
    assert result[0].value_range == (0.0, 3.0)


def test_merging_is_idempotent(rng):
    stream = stream_for(np.round(rng.normal(size=120), 2))
    once = merge_leaves(stream, blocks(stream, [15] * 8), 0.05, family=TestFamily.PARAMETRIC)
    twice = merge_leaves(stream, once, 0.05, family=TestFamily.PARAMETRIC)
    assert [leaf.id for leaf in twice] == [leaf.id for leaf in once]


def test_distant_distributions_never_mix(rng):
    labels = np.concatenate([rng.normal(0.0, 1.0, 300), rng.normal(5.0, 1.0, 300)])
    stream = stream_for(labels)
    result = merge_leaves(stream, blocks(stream, [30] * 20), 0.05, family=TestFamily.PARAMETRIC)
    for leaf in result:
        groups = set((leaf.sample_refs >= 300).tolist())
        assert len(groups) == 1
    assert 2 <= len(result) < 20


def test_rejects_non_leaves_and_bad_threshold():
    stream = stream_for([0, 1, 0, 1], num_classes=2)
    a, b = blocks(stream, [2, 2])
    with pytest.raises(ConfigError):
        merge_leaves(stream, [a, b], 1.0)
    a.children = [b.id]
    with pytest.raises(InvariantViolation):
        merge_leaves(stream, [a, b], 0.05)


def test_adjacency_filter_requires_ranges():
    stream = stream_for([0, 1, 0, 1], num_classes=2)
    with pytest.raises(InvariantViolation):
        merge_leaves(stream, blocks(stream, [2, 2]), 0.05, CandidateFilter.ADJACENT_RANGES)


@pytest.mark.slow
def test_same_distribution_collapses_to_few_leaves():
    collapsed = 0
    for trial in range(50):
        rng = np.random.default_rng(trial)
        stream = stream_for(rng.normal(size=600))
        result = merge_leaves(stream, blocks(stream, [30] * 20), 0.05, family=TestFamily.PARAMETRIC)
        collapsed += len(result) <= 3
    assert collapsed >= 45


@pytest.mark.slow
def test_distant_distributions_never_mix_over_many_trials():
    for trial in range(50):
        rng = np.random.default_rng(1000 + trial)
        labels = np.concatenate([rng.normal(0.0, 1.0, 300), rng.normal(5.0, 1.0, 300)])
        stream = stream_for(labels)
        result = merge_leaves(stream, blocks(stream, [30] * 20), 0.05, family=TestFamily.PARAMETRIC)
        assert all(len(set((leaf.sample_refs >= 300).tolist())) == 1 for leaf in result), trial


def test_cached_p_values_are_dropped_with_their_nodes():
    stream = stream_for([0] * 20 + [1] * 20, num_classes=2)
    first, second, third = blocks(stream, [10, 10, 20])
    stream.similarity_p(first, second, TestFamily.NONPARAMETRIC)
    stream.similarity_p(first, third, TestFamily.NONPARAMETRIC)
    assert len(stream._p_cache) == 2

    merged = merge_pair(stream, first, second)
    assert stream._p_cache == {}
    assert first.id not in stream._label_cache and second.id not in stream._label_cache

    stream.similarity_p(merged, third, TestFamily.NONPARAMETRIC)
    assert len(stream._p_cache) == 1
    stream.discard(third.id)
    assert stream._p_cache == {} and stream._p_keys.get(merged.id) == set()


def test_split_nodes_leave_the_cache():
    stream = stream_for([0] * 10 + [1] * 10, num_classes=2)
    left, right = blocks(stream, [10, 10])
    stream.similarity_p(left, right, TestFamily.NONPARAMETRIC)
    children = [stream.new_node(np.arange(5), (left.id,)), stream.new_node(np.arange(5, 10), (left.id,))]
    stream.attach(left, ThresholdRule(0, 0.0), children)
    assert stream._p_cache == {}
    assert left.id not in stream._label_cache
