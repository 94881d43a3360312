"""
Decision Stream training: splitting, merging, the training loop and ensembles.
"""
from .ensembles import (
    Ensemble,
    EnsembleConfig,
    EnsembleMember,
    EnsemblePreset,
    load_predictor,
    predict_dataset,
    predict_ensemble,
    save_ensemble,
    serialize_ensemble,
    deserialize_ensemble,
    train_ensemble,
)
from .merging import CandidateFilter, merge_leaves, merge_pair
from .splitting import CandidateSplit, best_binary_split, enumerate_candidate_splits, scalable_split
from .trainer import SplitMode, TraceRecord, TrainConfig, TrainTrace, cross_node_impurity, train

__all__ = [
    'TrainConfig', 'SplitMode', 'TrainTrace', 'TraceRecord', 'train', 'cross_node_impurity',
    'CandidateFilter', 'merge_pair', 'merge_leaves',
    'CandidateSplit', 'enumerate_candidate_splits', 'best_binary_split', 'scalable_split',
    'Ensemble', 'EnsembleConfig', 'EnsembleMember', 'EnsemblePreset', 'train_ensemble',
    'predict_ensemble', 'predict_dataset', 'serialize_ensemble', 'deserialize_ensemble',
    'save_ensemble', 'load_predictor',
]
