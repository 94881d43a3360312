"""
Decision Stream graph structures, routing and model files.
"""
from .builder import GrowingStream
from .graph import (
    DsModel,
    DsNode,
    ModelSummary,
    NodeStats,
    TaskKind,
    canonicalize,
    depth,
    model_summary,
    predict_batch,
    predict_one,
    topological_order,
    validate_dag,
)
from .rules import CategoryMapRule, OneVsRestRule, RangePartitionRule, RuleKind, SplitRule, ThresholdRule
from .serialization import (
    FORMAT_VERSION,
    deserialize,
    load_model,
    model_from_document,
    model_to_document,
    save_model,
    serialize,
)

__all__ = [
    'GrowingStream',
    'DsModel', 'DsNode', 'NodeStats', 'TaskKind', 'ModelSummary',
    'predict_one', 'predict_batch', 'validate_dag', 'topological_order',
    'canonicalize', 'depth', 'model_summary',
    'SplitRule', 'RuleKind', 'ThresholdRule', 'OneVsRestRule', 'CategoryMapRule', 'RangePartitionRule',
    'FORMAT_VERSION', 'serialize', 'deserialize', 'model_to_document', 'model_from_document',
    'save_model', 'load_model',
]
