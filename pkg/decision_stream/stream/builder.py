"""
Mutable graph used while a stream is being grown.

Nodes hold sorted index arrays into the training dataset; a merge creates a new
node from the union and discards its constituents, so ids are never reused.
"""
import logging
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..analysis.two_sample import TestFamily, similarity
from ..data.dataset import Dataset
from ..exceptions import InvariantViolation
from .graph import DsModel, DsNode, NodeStats, TaskKind, canonicalize, validate_dag
from .rules import SplitRule

logger = logging.getLogger(__name__)


class GrowingStream:
    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.labels = dataset.require_labels()
        self.task = TaskKind.CLASSIFICATION if dataset.is_classification else TaskKind.REGRESSION
        self.num_classes = dataset.schema.label.num_classes
        self.nodes: Dict[int, DsNode] = {}
        self._next_id = 0
        self._label_cache: Dict[int, np.ndarray] = {}
        self._p_cache: Dict[Tuple[int, int, str], float] = {}
        self._p_keys: Dict[int, Set[Tuple[int, int, str]]] = {}

    def new_node(self, refs: np.ndarray, parents: Sequence[int] = ()) -> DsNode:
        refs = np.asarray(refs, dtype=np.int64)
        stats = NodeStats.from_labels(self.labels[refs], self.num_classes)
        node = DsNode(
            id=self._next_id,
            parents=set(parents),
            stats=stats,
            prediction=stats.prediction(),
            sample_refs=refs,
        )
        self.nodes[node.id] = node
        self._next_id += 1
        return node

    def node_labels(self, node: DsNode) -> np.ndarray:
        labels = self._label_cache.get(node.id)
        if labels is None:
            labels = self.labels[node.sample_refs]
            self._label_cache[node.id] = labels
        return labels

    def similarity_p(self, a: DsNode, b: DsNode, family: TestFamily) -> float:
        """Cached p-value of the label samples of two nodes."""
        key = (min(a.id, b.id), max(a.id, b.id), TestFamily(family).value)
        p = self._p_cache.get(key)
        if p is None:
            p = similarity(self.node_labels(a), self.node_labels(b), family).p_value
            self._p_cache[key] = p
            self._p_keys.setdefault(a.id, set()).add(key)
            self._p_keys.setdefault(b.id, set()).add(key)
        return p

    def attach(self, node: DsNode, rule: SplitRule, children: List[DsNode]) -> None:
        """Give ``node`` its rule; ``children[slot]`` receives the rows routed to that slot."""
        if not node.is_leaf:
            raise InvariantViolation([f"node {node.id} already has children"])
        if rule.arity != len(children):
            raise InvariantViolation([f"rule arity {rule.arity} != {len(children)} children at node {node.id}"])
        node.rule = rule
        node.children = [child.id for child in children]
        node.terminal = False
        for child in children:
            child.parents.add(node.id)
        self._forget(node.id)

    def replace_child(self, parent_id: int, old_ids: Sequence[int], new_id: int) -> None:
        parent = self.nodes[parent_id]
        parent.children = [new_id if child in old_ids else child for child in parent.children]

    def _forget(self, node_id: int) -> None:
        # cached labels and p-values are only read for leaves
        self._label_cache.pop(node_id, None)
        for key in self._p_keys.pop(node_id, ()):
            self._p_cache.pop(key, None)
            partner = key[1] if key[0] == node_id else key[0]
            self._p_keys.get(partner, set()).discard(key)

    def discard(self, node_id: int) -> None:
        self.nodes.pop(node_id)
        self._forget(node_id)

    def leaves(self) -> List[DsNode]:
        return [node for node in self.nodes.values() if node.is_leaf]

    def snapshot(self, root_id: int, config: Optional[dict] = None) -> DsModel:
        """Current graph as a model sharing this stream's nodes (no copy, no renumbering)."""
        schema = self.dataset.schema
        return DsModel(
            task=self.task,
            num_classes=self.num_classes,
            root_id=root_id,
            nodes=self.nodes,
            schema_fingerprint=schema.fingerprint,
            n_features=schema.n_features,
            config=dict(config or {}),
            schema=schema,
        )

    def check(self, root_id: int) -> None:
        violations = validate_dag(self.snapshot(root_id))
        if violations:
            raise InvariantViolation(violations)

    def freeze(self, root_id: int, config: Optional[dict] = None) -> DsModel:
        return canonicalize(self.snapshot(root_id, config))
