"""Columnar dataset, CSV ingestion and the train/validation split."""
import logging
import math
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import DataError
from .schema import (
    MAX_CATEGORIES,
    FeatureDescriptor,
    FeatureKind,
    LabelDescriptor,
    Schema,
    read_schema,
    write_schema,
)

logger = logging.getLogger(__name__)

# Numeric columns with more distinct values than this are inferred continuous
INFER_CONTINUOUS_MIN_DISTINCT = 20

UNSEEN_CODE = -1


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: Schema
    columns: Tuple[np.ndarray, ...]
    labels: Optional[np.ndarray]
    row_count: int

    def __post_init__(self):
        if len(self.columns) != self.schema.n_features:
            raise DataError(f"expected {self.schema.n_features} columns, got {len(self.columns)}")
        for descriptor, column in zip(self.schema.features, self.columns):
            if len(column) != self.row_count:
                raise DataError(f"column '{descriptor.name}' has {len(column)} rows, expected {self.row_count}")
            if descriptor.kind.is_categorical and len(column):
                if column.min() < UNSEEN_CODE or column.max() >= descriptor.kind.cardinality:
                    raise DataError(f"codes of '{descriptor.name}' fall outside [0, {descriptor.kind.cardinality})")
        if self.labels is not None:
            if len(self.labels) != self.row_count:
                raise DataError(f"label array has {len(self.labels)} rows, expected {self.row_count}")
            num_classes = self.schema.label.num_classes
            if num_classes is not None and len(self.labels):
                if self.labels.min() < 0 or self.labels.max() >= num_classes:
                    raise DataError(f"class codes fall outside [0, {num_classes})")

    @classmethod
    def from_arrays(cls, schema: Schema, columns: Sequence, labels=None) -> "Dataset":
        """Build a dataset, coercing columns to float64 (continuous) or int32 codes."""
        converted = []
        for descriptor, column in zip(schema.features, columns):
            dtype = np.int32 if descriptor.kind.is_categorical else np.float64
            converted.append(np.ascontiguousarray(column, dtype=dtype))
        if len(converted) != schema.n_features:
            raise DataError(f"expected {schema.n_features} columns, got {len(converted)}")
        if labels is not None:
            dtype = np.int64 if schema.label.is_classification else np.float64
            labels = np.ascontiguousarray(labels, dtype=dtype)
        if converted:
            rows = len(converted[0])
        elif labels is not None:
            rows = len(labels)
        else:
            rows = 0
        return cls(schema, tuple(converted), labels, rows)

    @property
    def n_features(self) -> int:
        return self.schema.n_features

    @property
    def is_classification(self) -> bool:
        return self.schema.label.is_classification

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise DataError(f"dataset has no '{self.schema.label.name}' label column")
        return self.labels

    def row(self, i: int) -> Tuple:
        return tuple(column[i].item() for column in self.columns)

    def take(self, indices) -> "Dataset":
        """Rows at the given positions (repeats allowed, e.g. bootstrap draws)."""
        indices = np.asarray(indices, dtype=np.int64)
        columns = tuple(column[indices] for column in self.columns)
        labels = self.labels[indices] if self.labels is not None else None
        return Dataset(self.schema, columns, labels, len(indices))

    def select_features(self, indices) -> "Dataset":
        indices = [int(i) for i in indices]
        return Dataset(
            self.schema.subset(indices),
            tuple(self.columns[i] for i in indices),
            self.labels,
            self.row_count,
        )

    def equals(self, other: "Dataset") -> bool:
        if self.schema.fingerprint != other.schema.fingerprint or self.row_count != other.row_count:
            return False
        if any(not np.array_equal(a, b) for a, b in zip(self.columns, other.columns)):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or bool(np.array_equal(self.labels, other.labels))


# CSV ingestion

def _line_of(position: int) -> int:
    # header occupies line 1
    return position + 2


def _parse_reals(series: pd.Series, column: str) -> np.ndarray:
    try:
        values = series.to_numpy(dtype=object).astype(np.float64)
    except ValueError:
        values = None
    if values is not None and np.isfinite(values).all():
        return values
    parsed = pd.to_numeric(series, errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(parsed))
    position = int(bad[0]) if len(bad) else 0
    raise DataError(
        f"unparseable cell {series.iloc[position]!r} at line {_line_of(position)}, column '{column}'"
    )


def _is_numeric(series: pd.Series) -> bool:
    parsed = pd.to_numeric(series, errors="coerce")
    return bool(np.isfinite(parsed.to_numpy(dtype=np.float64)).all())


def _encode(series: pd.Series, column: str, vocabulary: Optional[Tuple[str, ...]],
            unseen: str) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Integer codes for a categorical column, assigned by first appearance."""
    if vocabulary is None:
        codes, uniques = pd.factorize(series, sort=False)
        if len(uniques) > MAX_CATEGORIES:
            raise DataError(f"column '{column}' has {len(uniques)} categories, more than {MAX_CATEGORIES}")
        return codes.astype(np.int32), tuple(str(u) for u in uniques)

    lookup = {value: code for code, value in enumerate(vocabulary)}
    codes = series.map(lookup)
    missing = codes.isna().to_numpy()
    if missing.any():
        position = int(np.flatnonzero(missing)[0])
        if unseen != "sentinel":
            raise DataError(
                f"unknown category {series.iloc[position]!r} at line {_line_of(position)}, column '{column}'"
            )
        logger.warning(f"{int(missing.sum())} unseen categories in column '{column}'")
        codes = codes.fillna(UNSEEN_CODE)
    return codes.to_numpy(dtype=np.int32), vocabulary


def _parse_codes(series: pd.Series, column: str, cardinality: int, unseen: str) -> np.ndarray:
    """Cells of a categorical column whose schema lists no vocabulary, read as codes."""
    parsed = pd.to_numeric(series, errors="coerce").to_numpy(dtype=np.float64)
    valid = np.isfinite(parsed) & (np.floor(parsed) == parsed) & (parsed >= 0) & (parsed < cardinality)
    if not valid.all():
        position = int(np.flatnonzero(~valid)[0])
        if unseen != "sentinel":
            raise DataError(
                f"code {series.iloc[position]!r} outside [0, {cardinality}) at line {_line_of(position)}, "
                f"column '{column}'"
            )
        logger.warning(f"{int((~valid).sum())} unseen codes in column '{column}'")
    return np.where(valid, parsed, UNSEEN_CODE).astype(np.int32)


def _read_frame(path) -> pd.DataFrame:
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    try:
        # header read as a data row so every row is held to its field count
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path} has no header row") from e
    except pd.errors.ParserError as e:
        raise DataError(f"ragged rows in {path}: {e}") from e

    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = [str(name) for name in raw.iloc[0]]
    if frame.isna().to_numpy().any():
        position = int(np.flatnonzero(frame.isna().any(axis=1).to_numpy())[0])
        raise DataError(f"ragged row at line {_line_of(position)} of {path}")
    empty = (frame == "").to_numpy()
    if empty.any():
        position, col = (int(v[0]) for v in np.nonzero(empty))
        raise DataError(f"missing value at line {_line_of(position)}, column '{frame.columns[col]}'")
    return frame


def _infer_feature(series: pd.Series, name: str) -> FeatureDescriptor:
    distinct = series.nunique()
    if _is_numeric(series) and distinct > INFER_CONTINUOUS_MIN_DISTINCT:
        return FeatureDescriptor(name, FeatureKind.continuous())
    if distinct > MAX_CATEGORIES:
        raise DataError(f"column '{name}' has {distinct} categories, more than {MAX_CATEGORIES}")
    return FeatureDescriptor(name, FeatureKind.categorical(max(2, distinct)))


def _infer_label(series: pd.Series, name: str) -> LabelDescriptor:
    distinct = series.nunique()
    if _is_numeric(series) and distinct > INFER_CONTINUOUS_MIN_DISTINCT:
        return LabelDescriptor(name)
    return LabelDescriptor(name, max(2, distinct))


def _read_labels(series: pd.Series, label: LabelDescriptor,
                 declared: bool) -> Tuple[np.ndarray, LabelDescriptor]:
    name = label.name
    if not label.is_classification:
        return _parse_reals(series, name), label
    if declared and label.classes is None:
        return _parse_codes(series, name, label.num_classes, "error").astype(np.int64), label
    labels, classes = _encode(series, name, label.classes, "error")
    if len(classes) > label.num_classes:
        raise DataError(f"label '{name}' has {len(classes)} classes, schema allows {label.num_classes}")
    return labels, LabelDescriptor(name, label.num_classes, classes)


def load_csv(path, schema: Union[Schema, str, None] = None, label_column: Optional[str] = None,
             require_label: bool = True, unseen: str = "error") -> Dataset:
    """Read a headed CSV into a Dataset.

    ``schema`` may be a Schema, a path to a sidecar schema file, or None to infer
    column kinds. Categorical columns whose schema lists no vocabulary hold integer
    codes. With ``unseen="sentinel"`` category strings missing from the schema's
    vocabulary become code -1 instead of an error. When ``require_label`` is false
    a label column that does not fit the schema is dropped with a warning.
    """
    if isinstance(schema, (str, os.PathLike)):
        schema = read_schema(schema)
    frame = _read_frame(path)
    header = list(frame.columns)

    if schema is not None:
        if label_column is not None and label_column != schema.label.name:
            raise DataError(f"label column '{label_column}' differs from schema label '{schema.label.name}'")
        label_column = schema.label.name
    elif label_column is None:
        raise DataError("a label column name is required when no schema is given")

    has_label = label_column in header
    if not has_label and require_label:
        raise DataError(f"label column '{label_column}' not found in {path}")

    if schema is None:
        descriptors = [_infer_feature(frame[name], name) for name in header if name != label_column]
        label = _infer_label(frame[label_column], label_column)
    else:
        missing = [f.name for f in schema.features if f.name not in header]
        if missing:
            raise DataError(f"columns missing from {path}: {', '.join(missing)}")
        descriptors = list(schema.features)
        label = schema.label

    columns: List[np.ndarray] = []
    features: List[FeatureDescriptor] = []
    for descriptor in descriptors:
        series = frame[descriptor.name]
        if descriptor.kind.is_categorical and schema is not None and descriptor.categories is None:
            columns.append(_parse_codes(series, descriptor.name, descriptor.kind.cardinality, unseen))
            features.append(descriptor)
        elif descriptor.kind.is_categorical:
            codes, vocabulary = _encode(series, descriptor.name, descriptor.categories, unseen)
            if len(vocabulary) > descriptor.kind.cardinality:
                raise DataError(
                    f"column '{descriptor.name}' has {len(vocabulary)} categories, "
                    f"schema allows {descriptor.kind.cardinality}"
                )
            columns.append(codes)
            features.append(FeatureDescriptor(descriptor.name, descriptor.kind, vocabulary))
        else:
            columns.append(_parse_reals(series, descriptor.name))
            features.append(descriptor)

    labels = None
    if has_label:
        try:
            labels, label = _read_labels(frame[label_column], label, schema is not None)
        except DataError as e:
            if require_label:
                raise
            logger.warning(f"ignoring label column '{label_column}': {e}")

    dataset = Dataset.from_arrays(Schema(tuple(features), label), columns, labels)
    if not columns:
        dataset = Dataset(dataset.schema, (), dataset.labels, len(frame))
    logger.info(f"Loaded {dataset.row_count} rows x {dataset.n_features} features from {path}")
    return dataset


def _decode(codes: np.ndarray, vocabulary: Optional[Tuple[str, ...]]) -> List[str]:
    if vocabulary is None:
        return [str(int(c)) for c in codes]
    return [vocabulary[int(c)] if c >= 0 else "" for c in codes]


def write_csv(dataset: Dataset, path, schema_path=None) -> None:
    """Write a dataset as CSV; optionally write its sidecar schema with vocabularies."""
    data = {}
    for descriptor, column in zip(dataset.schema.features, dataset.columns):
        if descriptor.kind.is_categorical:
            data[descriptor.name] = _decode(column, descriptor.categories)
        else:
            data[descriptor.name] = [repr(float(v)) for v in column]
    if dataset.labels is not None:
        label = dataset.schema.label
        if label.is_classification:
            data[label.name] = _decode(dataset.labels, label.classes)
        else:
            data[label.name] = [repr(float(v)) for v in dataset.labels]
    pd.DataFrame(data).to_csv(path, index=False)
    if schema_path is not None:
        write_schema(dataset.schema, schema_path)


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def split_train_valid(dataset: Dataset, valid_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Deterministic shuffle-and-cut into (train, validation)."""
    if not 0.0 < valid_fraction < 1.0:
        raise DataError(f"valid_fraction must lie in (0, 1), got {valid_fraction}")
    n = dataset.row_count
    if n < 2:
        raise DataError(f"need at least 2 rows to split, got {n}")
    n_valid = _round_half_up(valid_fraction * n)
    if n_valid == 0 or n_valid == n:
        raise DataError(f"valid_fraction {valid_fraction} leaves one side empty for {n} rows")

    order = np.random.default_rng(seed).permutation(n)
    valid_rows = np.sort(order[:n_valid])
    train_rows = np.sort(order[n_valid:])
    return dataset.take(train_rows), dataset.take(valid_rows)
