"""
Decision Stream graph: node and model types, routing, structural validation.
"""
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from ..data.dataset import Dataset
from ..data.schema import Schema
from ..exceptions import DataError, SchemaMismatchError
from .rules import UNSEEN, SplitRule

logger = logging.getLogger(__name__)

Prediction = Union[int, float]


class TaskKind(str, Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


@dataclass(frozen=True)
class NodeStats:
    sample_count: int
    class_histogram: Optional[Tuple[int, ...]] = None
    mean: Optional[float] = None
    m2: Optional[float] = None

    @classmethod
    def from_labels(cls, labels: np.ndarray, num_classes: Optional[int]) -> "NodeStats":
        if num_classes is not None:
            histogram = np.bincount(labels, minlength=num_classes)
            return cls(len(labels), class_histogram=tuple(int(c) for c in histogram))
        if len(labels) == 0:
            return cls(0, mean=0.0, m2=0.0)
        mean = float(labels.mean())
        return cls(len(labels), mean=mean, m2=float(((labels - mean) ** 2).sum()))

    def prediction(self) -> Prediction:
        if self.class_histogram is not None:
            # argmax keeps the lowest class code on ties
            return int(np.argmax(self.class_histogram))
        return self.mean

    def impurity(self) -> float:
        """Gini impurity of the class histogram, or the population variance."""
        if self.sample_count == 0:
            return 0.0
        if self.class_histogram is not None:
            fractions = np.asarray(self.class_histogram, dtype=np.float64) / self.sample_count
            return float((fractions * (1.0 - fractions)).sum())
        return self.m2 / self.sample_count


@dataclass
class DsNode:
    id: int
    parents: Set[int] = field(default_factory=set)
    rule: Optional[SplitRule] = None
    children: List[int] = field(default_factory=list)
    terminal: bool = False
    stats: Optional[NodeStats] = None
    prediction: Optional[Prediction] = None
    # training-time only
    sample_refs: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    value_range: Optional[Tuple[float, float]] = field(default=None, compare=False, repr=False)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def sample_count(self) -> int:
        return self.stats.sample_count if self.stats is not None else 0

    def distinct_children(self) -> List[int]:
        return list(dict.fromkeys(self.children))


@dataclass
class DsModel:
    task: TaskKind
    num_classes: Optional[int]
    root_id: int
    nodes: Dict[int, DsNode]
    schema_fingerprint: str
    n_features: int
    config: Dict[str, Any] = field(default_factory=dict)
    schema: Optional[Schema] = field(default=None, compare=False)

    @property
    def root(self) -> DsNode:
        return self.nodes[self.root_id]

    def leaves(self) -> List[DsNode]:
        return [node for node in self.nodes.values() if node.is_leaf]


@dataclass(frozen=True)
class ModelSummary:
    nodes: int
    depth: int
    leaves: int
    max_fanin: int

    def __str__(self) -> str:
        return f"nodes={self.nodes} depth={self.depth} leaves={self.leaves} max_fanin={self.max_fanin}"


def topological_order(model: DsModel) -> List[int]:
    """Kahn order from the root: FIFO queue, children visited in slot order.

    Depends only on structure, so it also defines the canonical numbering.
    Nodes on a cycle or unreachable from the root are left out.
    """
    pending = {node_id: len(node.parents) for node_id, node in model.nodes.items()}
    order = []
    queue = deque([model.root_id]) if model.root_id in model.nodes and pending[model.root_id] == 0 else deque()
    while queue:
        node_id = queue.popleft()
        order.append(node_id)
        for child_id in model.nodes[node_id].distinct_children():
            if child_id not in pending:
                continue
            pending[child_id] -= 1
            if pending[child_id] == 0:
                queue.append(child_id)
    return order


def _heaviest_slot(model: DsModel, node: DsNode) -> int:
    counts = [model.nodes[child].sample_count for child in node.children]
    return int(np.argmax(counts))


def predict_one(model: DsModel, sample: Sequence) -> Prediction:
    """Walk from the root to a leaf and return its prediction."""
    if len(sample) != model.n_features:
        raise DataError(f"sample has {len(sample)} features, model expects {model.n_features}")
    node = model.root
    while node.children:
        slot = node.rule.route(sample[node.rule.feature])
        if slot is None:
            slot = _heaviest_slot(model, node)
        node = model.nodes[node.children[slot]]
    return node.prediction


def assign_leaves(model: DsModel, columns: Sequence[np.ndarray], row_count: int) -> np.ndarray:
    """Leaf id reached by every row, routing all rows at once in topological order."""
    leaf_of = np.full(row_count, -1, dtype=np.int64)
    arriving: Dict[int, List[np.ndarray]] = {model.root_id: [np.arange(row_count)]}
    for node_id in topological_order(model):
        parts = arriving.pop(node_id, None)
        if not parts:
            continue
        rows = np.concatenate(parts)
        node = model.nodes[node_id]
        if node.is_leaf:
            leaf_of[rows] = node_id
            continue
        slots = node.rule.route_column(columns[node.rule.feature][rows])
        unseen = slots == UNSEEN
        if unseen.any():
            logger.warning(f"{int(unseen.sum())} rows carry categories unseen at node {node_id}")
            slots[unseen] = _heaviest_slot(model, node)
        for slot, child_id in enumerate(node.children):
            selected = rows[slots == slot]
            if len(selected):
                arriving.setdefault(child_id, []).append(selected)
    return leaf_of


def check_schema(model: DsModel, dataset: Dataset) -> None:
    if dataset.schema.fingerprint != model.schema_fingerprint:
        raise SchemaMismatchError("dataset schema does not match the model's schema fingerprint")


def predict_batch(model: DsModel, dataset: Dataset) -> np.ndarray:
    check_schema(model, dataset)
    dtype = np.int64 if model.task == TaskKind.CLASSIFICATION else np.float64
    if dataset.row_count == 0:
        return np.empty(0, dtype=dtype)
    leaf_of = assign_leaves(model, dataset.columns, dataset.row_count)
    leaf_ids, inverse = np.unique(leaf_of, return_inverse=True)
    values = np.array([model.nodes[int(leaf_id)].prediction for leaf_id in leaf_ids], dtype=dtype)
    return values[inverse]


def validate_dag(model: DsModel) -> List[str]:
    """Structural contract of a model; an empty list means valid."""
    violations: List[str] = []
    nodes = model.nodes
    if model.root_id not in nodes:
        return [f"root {model.root_id} is not a node"]
    if nodes[model.root_id].parents:
        violations.append(f"root {model.root_id} has parents {sorted(nodes[model.root_id].parents)}")

    for node_id, node in nodes.items():
        if node.id != node_id:
            violations.append(f"node keyed {node_id} carries id {node.id}")
        dangling = [c for c in node.children if c not in nodes] + [p for p in node.parents if p not in nodes]
        if dangling:
            violations.append(f"node {node_id} references missing nodes {sorted(set(dangling))}")
        if (node.rule is None) != (not node.children):
            violations.append(f"node {node_id}: rule presence disagrees with children")
        if node.terminal and node.rule is not None:
            violations.append(f"node {node_id} is terminal but carries a rule")
        if node.rule is not None and node.children and node.rule.arity != len(node.children):
            violations.append(f"node {node_id}: rule arity {node.rule.arity} != {len(node.children)} children")
        if node_id != model.root_id and not node.parents:
            violations.append(f"node {node_id} has no parents")
        if node.is_leaf and (node.prediction is None or node.stats is None):
            violations.append(f"leaf {node_id} has no prediction")
        for child_id in node.distinct_children():
            if child_id in nodes and node_id not in nodes[child_id].parents:
                violations.append(f"edge {node_id}->{child_id} missing from the child's parents")
        for parent_id in node.parents:
            if parent_id in nodes and node_id not in nodes[parent_id].children:
                violations.append(f"node {node_id} lists parent {parent_id} which has no edge to it")

    # acyclicity over every node (edges taken from child lists), then reachability
    indegree = dict.fromkeys(nodes, 0)
    for node in nodes.values():
        for child_id in node.distinct_children():
            if child_id in nodes:
                indegree[child_id] += 1
    queue = deque(node_id for node_id, degree in indegree.items() if degree == 0)
    visited = 0
    while queue:
        node_id = queue.popleft()
        visited += 1
        for child_id in nodes[node_id].distinct_children():
            if child_id not in nodes:
                continue
            indegree[child_id] -= 1
            if indegree[child_id] == 0:
                queue.append(child_id)
    if visited != len(nodes):
        violations.append(f"cycle through nodes {sorted(n for n, d in indegree.items() if d > 0)}")
        return violations

    reachable = {model.root_id}
    frontier = deque([model.root_id])
    while frontier:
        for child_id in nodes[frontier.popleft()].distinct_children():
            if child_id in nodes and child_id not in reachable:
                reachable.add(child_id)
                frontier.append(child_id)
    unreachable = sorted(set(nodes) - reachable)
    if unreachable:
        violations.append(f"nodes unreachable from the root: {unreachable}")

    leaf_total = sum(node.sample_count for node in nodes.values() if node.is_leaf)
    root_total = nodes[model.root_id].sample_count
    if leaf_total != root_total:
        violations.append(f"leaf sample counts sum to {leaf_total}, root holds {root_total}")
    return violations


def depth(model: DsModel) -> int:
    """Longest root-to-leaf path, in edges."""
    level = {model.root_id: 0}
    for node_id in topological_order(model):
        for child_id in model.nodes[node_id].distinct_children():
            level[child_id] = max(level.get(child_id, 0), level[node_id] + 1)
    return max(level.values())


def model_summary(model: DsModel) -> ModelSummary:
    return ModelSummary(
        nodes=len(model.nodes),
        depth=depth(model),
        leaves=len(model.leaves()),
        max_fanin=max(len(node.parents) for node in model.nodes.values()),
    )


def canonicalize(model: DsModel) -> DsModel:
    """Renumber nodes in topological order and drop training-time payloads."""
    order = topological_order(model)
    if len(order) != len(model.nodes):
        raise DataError("cannot canonicalize a model with cycles or unreachable nodes")
    new_id = {old: new for new, old in enumerate(order)}
    nodes = {}
    for old in order:
        node = model.nodes[old]
        nodes[new_id[old]] = DsNode(
            id=new_id[old],
            parents={new_id[p] for p in node.parents},
            rule=node.rule,
            children=[new_id[c] for c in node.children],
            terminal=node.terminal,
            stats=node.stats,
            prediction=node.prediction,
        )
    return replace(model, root_id=new_id[model.root_id], nodes=nodes)
