"""
Tabular data: schemas, datasets, CSV input/output and synthetic generation.
"""
from .dataset import Dataset, load_csv, split_train_valid, write_csv
from .schema import (
    FeatureDescriptor,
    FeatureKind,
    FeatureType,
    LabelDescriptor,
    Schema,
    read_schema,
    write_schema,
)
from .synthgen import SynthConfig, generate, synth_schema

__all__ = [
    'Dataset', 'load_csv', 'write_csv', 'split_train_valid',
    'Schema', 'FeatureDescriptor', 'FeatureKind', 'FeatureType', 'LabelDescriptor',
    'read_schema', 'write_schema',
    'SynthConfig', 'generate', 'synth_schema',
]
