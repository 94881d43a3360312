"""Fusion of leaves whose label distributions cannot be told apart."""
import logging
from collections import deque
from enum import Enum
from typing import List, Sequence

import numpy as np

from ..analysis.two_sample import TestFamily
from ..exceptions import ConfigError, InvariantViolation
from ..stream.builder import GrowingStream
from ..stream.graph import DsNode

logger = logging.getLogger(__name__)


class CandidateFilter(str, Enum):
    ALL = "all"
    ADJACENT_RANGES = "adjacent_ranges"


def ranges_adjacent(a: DsNode, b: DsNode) -> bool:
    if a.value_range is None or b.value_range is None:
        return False
    return a.value_range[1] == b.value_range[0] or b.value_range[1] == a.value_range[0]


def merge_pair(stream: GrowingStream, a: DsNode, b: DsNode) -> DsNode:
    """Replace leaves ``a`` and ``b`` with one leaf holding both sample sets.

    Parents are united and every parent edge into either leaf is re-pointed at
    the new node. The merged node starts non-terminal.
    """
    if not a.is_leaf or not b.is_leaf:
        raise InvariantViolation([f"cannot merge non-leaf nodes {a.id} and {b.id}"])
    merged = stream.new_node(np.union1d(a.sample_refs, b.sample_refs), a.parents | b.parents)
    if ranges_adjacent(a, b):
        merged.value_range = (min(a.value_range[0], b.value_range[0]), max(a.value_range[1], b.value_range[1]))
    for parent_id in merged.parents:
        stream.replace_child(parent_id, (a.id, b.id), merged.id)
    stream.discard(a.id)
    stream.discard(b.id)
    logger.debug(f"merged leaves {a.id} and {b.id} into {merged.id} ({merged.sample_count} samples)")
    return merged


def merge_leaves(stream: GrowingStream, leaves: Sequence[DsNode], p_lim: float,
                 candidate_filter: CandidateFilter = CandidateFilter.ALL,
                 family: TestFamily = TestFamily.NONPARAMETRIC) -> List[DsNode]:
    """Merge similar leaves until a pass leaves the set size unchanged.

    Each pass polls the smallest leaf (ties by id), pairs it with the remaining
    candidate of highest p-value (ties to the lower id) and merges them when
    that p-value exceeds ``p_lim``. A merged node waits for the next pass.
    """
    if not 0.0 < p_lim < 1.0:
        raise ConfigError(f"p_lim must lie in (0, 1), got {p_lim}")
    candidate_filter = CandidateFilter(candidate_filter)
    current = list(leaves)
    for node in current:
        if not node.is_leaf:
            raise InvariantViolation([f"node {node.id} is not a leaf"])
        if candidate_filter == CandidateFilter.ADJACENT_RANGES and node.value_range is None:
            raise InvariantViolation([f"leaf {node.id} has no value range for adjacent merging"])

    while True:
        pending = deque(sorted(current, key=lambda n: (n.sample_count, n.id)))
        merged_set: List[DsNode] = []
        while pending:
            head = pending.popleft()
            best, best_p = None, -1.0
            for candidate in pending:
                if candidate_filter == CandidateFilter.ADJACENT_RANGES and not ranges_adjacent(head, candidate):
                    continue
                p = stream.similarity_p(head, candidate, family)
                if p > best_p or (p == best_p and candidate.id < best.id):
                    best, best_p = candidate, p
            if best is not None and best_p > p_lim:
                pending.remove(best)
                merged_set.append(merge_pair(stream, head, best))
            else:
                merged_set.append(head)
        if len(merged_set) >= len(current):
            return merged_set
        logger.debug(f"merge pass: {len(current)} -> {len(merged_set)} leaves")
        current = merged_set
