"""Column typing for tabular datasets and the JSON sidecar schema format."""
import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ValidationError

from ..exceptions import DataError

MAX_CATEGORIES = 2 ** 16


class FeatureType(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"
    BINARY = "binary"


@dataclass(frozen=True)
class FeatureKind:
    type: FeatureType
    cardinality: Optional[int] = None

    def __post_init__(self):
        if self.type == FeatureType.CONTINUOUS:
            if self.cardinality is not None:
                raise DataError("continuous features carry no cardinality")
        elif self.type == FeatureType.BINARY:
            if self.cardinality not in (None, 2):
                raise DataError("binary features have cardinality 2")
            object.__setattr__(self, "cardinality", 2)
        elif self.cardinality is None or self.cardinality < 2:
            raise DataError(f"categorical cardinality must be >= 2, got {self.cardinality}")
        elif self.cardinality > MAX_CATEGORIES:
            raise DataError(f"categorical cardinality {self.cardinality} exceeds {MAX_CATEGORIES}")

    @classmethod
    def continuous(cls) -> "FeatureKind":
        return cls(FeatureType.CONTINUOUS)

    @classmethod
    def categorical(cls, cardinality: int) -> "FeatureKind":
        if cardinality == 2:
            return cls.binary()
        return cls(FeatureType.CATEGORICAL, cardinality)

    @classmethod
    def binary(cls) -> "FeatureKind":
        return cls(FeatureType.BINARY, 2)

    @property
    def is_categorical(self) -> bool:
        return self.type != FeatureType.CONTINUOUS


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: FeatureKind
    # value strings by code; not part of the fingerprint
    categories: Optional[Tuple[str, ...]] = None


@dataclass(frozen=True)
class LabelDescriptor:
    name: str
    num_classes: Optional[int] = None  # None means a real-valued label
    classes: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.num_classes is not None and self.num_classes < 2:
            raise DataError(f"class labels need num_classes >= 2, got {self.num_classes}")

    @property
    def is_classification(self) -> bool:
        return self.num_classes is not None


@dataclass(frozen=True)
class Schema:
    features: Tuple[FeatureDescriptor, ...]
    label: LabelDescriptor

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if self.label.name in names:
            raise DataError(f"label '{self.label.name}' collides with a feature name")
        for feature in self.features:
            if feature.categories is not None and len(feature.categories) > (feature.kind.cardinality or 0):
                raise DataError(f"feature '{feature.name}' lists more categories than its cardinality")

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def fingerprint(self) -> str:
        """Stable hash of names, kinds and cardinalities (vocabularies excluded)."""
        payload = {
            "features": [[f.name, f.kind.type.value, f.kind.cardinality] for f in self.features],
            "label": [self.label.name, self.label.num_classes],
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def subset(self, indices) -> "Schema":
        return Schema(tuple(self.features[i] for i in indices), self.label)


# Sidecar file models

class FeatureSpec(BaseModel):
    name: str
    kind: Literal["continuous", "categorical", "binary"]
    cardinality: Optional[int] = None
    categories: Optional[List[str]] = None


class LabelSpec(BaseModel):
    name: str
    kind: Literal["class", "real"]
    num_classes: Optional[int] = None
    classes: Optional[List[str]] = None


class SchemaSpec(BaseModel):
    features: List[FeatureSpec]
    label: LabelSpec

    @classmethod
    def from_schema(cls, schema: Schema) -> "SchemaSpec":
        features = [
            FeatureSpec(
                name=f.name,
                kind=f.kind.type.value,
                cardinality=f.kind.cardinality,
                categories=list(f.categories) if f.categories is not None else None,
            )
            for f in schema.features
        ]
        label = LabelSpec(
            name=schema.label.name,
            kind="class" if schema.label.is_classification else "real",
            num_classes=schema.label.num_classes,
            classes=list(schema.label.classes) if schema.label.classes is not None else None,
        )
        return cls(features=features, label=label)

    def to_schema(self) -> Schema:
        features = []
        for spec in self.features:
            if spec.kind == "continuous":
                kind = FeatureKind.continuous()
            elif spec.kind == "binary":
                kind = FeatureKind.binary()
            else:
                if spec.cardinality is None:
                    raise DataError(f"categorical feature '{spec.name}' needs a cardinality")
                kind = FeatureKind(FeatureType.CATEGORICAL, spec.cardinality)
            categories = tuple(spec.categories) if spec.categories is not None else None
            features.append(FeatureDescriptor(spec.name, kind, categories))

        if self.label.kind == "class":
            if self.label.num_classes is None:
                raise DataError(f"class label '{self.label.name}' needs num_classes")
            label = LabelDescriptor(
                self.label.name,
                self.label.num_classes,
                tuple(self.label.classes) if self.label.classes is not None else None,
            )
        else:
            label = LabelDescriptor(self.label.name)
        return Schema(tuple(features), label)


def schema_to_dict(schema: Schema) -> dict:
    return SchemaSpec.from_schema(schema).dict(exclude_none=True)


def schema_from_dict(document: dict) -> Schema:
    try:
        return SchemaSpec.parse_obj(document).to_schema()
    except ValidationError as e:
        raise DataError(f"invalid schema document: {e}") from e


def read_schema(path) -> Schema:
    try:
        return SchemaSpec.parse_file(path).to_schema()
    except FileNotFoundError as e:
        raise DataError(f"schema file not found: {path}") from e
    except (ValidationError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"invalid schema file {path}: {e}") from e


def write_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(SchemaSpec.from_schema(schema).json(exclude_none=True, indent=2))
        handle.write("\n")
