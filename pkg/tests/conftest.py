import numpy as np
import pytest

from decision_stream.data.dataset import Dataset
from decision_stream.data.schema import FeatureDescriptor, FeatureKind, LabelDescriptor, Schema


def build_dataset(features, labels, num_classes=None):
    """features: list of (name, kind, values); kind is 'continuous' or a category count."""
    descriptors = []
    columns = []
    for name, kind, values in features:
        if kind == 'continuous':
            descriptors.append(FeatureDescriptor(name, FeatureKind.continuous()))
        else:
            descriptors.append(FeatureDescriptor(name, FeatureKind.categorical(kind)))
        columns.append(values)
    label = LabelDescriptor('y', num_classes) if num_classes else LabelDescriptor('y')
    return Dataset.from_arrays(Schema(tuple(descriptors), label), columns, labels)


def random_dataset(rng, n_rows, n_features, classification=True, num_classes=2):
    """Small dataset with a mix of feature kinds and plenty of ties."""
    features = []
    for f in range(n_features):
        if rng.random() < 0.5:
            features.append((f'x{f}', 'continuous', rng.integers(0, 5, n_rows).astype(float)))
        else:
            cardinality = int(rng.integers(2, 5))
            features.append((f'c{f}', cardinality, rng.integers(0, cardinality, n_rows)))
    if classification:
        return build_dataset(features, rng.integers(0, num_classes, n_rows), num_classes)
    return build_dataset(features, np.round(rng.normal(size=n_rows), 1))


@pytest.fixture
def toy():
    """x = 1..4 with labels 0,0,1,1: one threshold separates the classes."""
    return build_dataset([('x', 'continuous', [1.0, 2.0, 3.0, 4.0])], [0, 0, 1, 1], num_classes=2)


@pytest.fixture
def weighted_xor():
    """XOR of two binary features, cell (1, 1) holding a single row.

    The imbalance makes the first split on either feature informative; the
    balanced four-point XOR has no split with a p-value below 1.
    """
    cells = [((0, 0), 0, 6), ((0, 1), 1, 6), ((1, 0), 1, 6), ((1, 1), 0, 1)]
    a, b, y = [], [], []
    for (va, vb), label, count in cells:
        a += [va] * count
        b += [vb] * count
        y += [label] * count
    return build_dataset([('a', 2, a), ('b', 2, b)], y, num_classes=2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
