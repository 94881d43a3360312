"""
Ensembles of Decision Streams: bagging, random subspaces and forests.

Each member draws its rows and features from a generator seeded by
(seed, member index), so members can be trained in any order or in parallel.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from ..data.dataset import Dataset
from ..data.schema import Schema, schema_from_dict, schema_to_dict
from ..exceptions import ConfigError, DataError, ModelFormatError, SchemaMismatchError
from ..stream.graph import DsModel, TaskKind, predict_batch, predict_one
from ..stream.serialization import FORMAT_VERSION, model_from_document, model_to_document, read_document
from .trainer import TrainConfig, train

logger = logging.getLogger(__name__)

ENSEMBLE_KIND = "ensemble"


class EnsemblePreset(str, Enum):
    BAGGING = "bagging"
    SUBSPACE = "subspace"
    FOREST = "forest"


class Aggregation(str, Enum):
    MAJORITY_VOTE = "majority_vote"
    MEAN = "mean"


@dataclass(frozen=True)
class EnsembleConfig:
    n_members: int = 10
    bootstrap: bool = True
    # None picks the task default: sqrt(F)/F for classes, 1/3 for regression
    feature_fraction: Optional[float] = 1.0
    base: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.n_members < 1:
            raise ConfigError(f"n_members must be >= 1, got {self.n_members}")
        if self.feature_fraction is not None and not 0.0 < self.feature_fraction <= 1.0:
            raise ConfigError(f"feature_fraction must lie in (0, 1], got {self.feature_fraction}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    @classmethod
    def preset(cls, name: Union[str, EnsemblePreset], **kwargs) -> "EnsembleConfig":
        name = EnsemblePreset(name)
        if name == EnsemblePreset.BAGGING:
            return cls(bootstrap=True, feature_fraction=1.0, **kwargs)
        if name == EnsemblePreset.SUBSPACE:
            return cls(bootstrap=False, feature_fraction=None, **kwargs)
        return cls(bootstrap=True, feature_fraction=None, **kwargs)

    def resolve_fraction(self, n_features: int, classification: bool) -> float:
        if self.feature_fraction is not None:
            return self.feature_fraction
        if classification:
            return math.sqrt(n_features) / n_features
        return 1.0 / 3.0

    def snapshot(self, n_features: int, classification: bool) -> dict:
        return {
            "n_members": self.n_members,
            "bootstrap": self.bootstrap,
            "feature_fraction": self.resolve_fraction(n_features, classification),
            "seed": self.seed,
            "base": self.base.snapshot(),
        }


@dataclass
class EnsembleMember:
    features: Tuple[int, ...]
    model: DsModel


@dataclass
class Ensemble:
    members: List[EnsembleMember]
    task: TaskKind
    num_classes: Optional[int]
    schema_fingerprint: str
    config: Dict[str, Any] = field(default_factory=dict)
    schema: Optional[Schema] = field(default=None, compare=False)

    @property
    def aggregation(self) -> Aggregation:
        return Aggregation.MAJORITY_VOTE if self.task == TaskKind.CLASSIFICATION else Aggregation.MEAN


def feature_count(fraction: float, n_features: int) -> int:
    k = int(math.floor(fraction * n_features + 0.5))
    if k == 0:
        raise ConfigError(f"feature_fraction {fraction} selects no features out of {n_features}")
    return min(k, n_features)


def draw_member(n_rows: int, n_features: int, k: int, bootstrap: bool, seed: int,
                index: int) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Rows and sorted feature subset of one member."""
    rng = np.random.default_rng([seed, index])
    rows = rng.integers(0, n_rows, n_rows) if bootstrap else np.arange(n_rows)
    features = np.sort(rng.choice(n_features, k, replace=False))
    return rows, tuple(int(f) for f in features)


def train_member(dataset: Dataset, config: EnsembleConfig, k: int, index: int) -> EnsembleMember:
    rows, features = draw_member(dataset.row_count, dataset.n_features, k, config.bootstrap, config.seed, index)
    subset = dataset.take(rows).select_features(features)
    model, _ = train(subset, config.base)
    logger.info(f"Member {index}: {len(features)} features, {len(model.nodes)} nodes")
    return EnsembleMember(features, model)


def train_ensemble(dataset: Dataset, config: Optional[EnsembleConfig] = None) -> Ensemble:
    config = config or EnsembleConfig()
    if dataset.row_count == 0:
        raise DataError("cannot train an ensemble on an empty dataset")
    fraction = config.resolve_fraction(dataset.n_features, dataset.is_classification)
    k = feature_count(fraction, dataset.n_features)
    logger.info(f"Training {config.n_members} members on {k} of {dataset.n_features} features each")

    if config.threads > 1 and config.n_members > 1:
        members = Parallel(n_jobs=config.threads, prefer="threads")(
            delayed(train_member)(dataset, config, k, i) for i in range(config.n_members)
        )
    else:
        members = [train_member(dataset, config, k, i) for i in range(config.n_members)]

    return Ensemble(
        members=list(members),
        task=TaskKind.CLASSIFICATION if dataset.is_classification else TaskKind.REGRESSION,
        num_classes=dataset.schema.label.num_classes,
        schema_fingerprint=dataset.schema.fingerprint,
        config=config.snapshot(dataset.n_features, dataset.is_classification),
        schema=dataset.schema,
    )


def aggregate(ensemble: Ensemble, predictions: np.ndarray) -> np.ndarray:
    """Fold a (members x rows) prediction matrix into one prediction per row."""
    if ensemble.aggregation == Aggregation.MEAN:
        return predictions.astype(np.float64).mean(axis=0)
    predictions = predictions.astype(np.int64)
    n_rows = predictions.shape[1]
    num_classes = max(ensemble.num_classes or 0, int(predictions.max()) + 1 if predictions.size else 0)
    votes = np.zeros((n_rows, num_classes), dtype=np.int64)
    rows = np.arange(n_rows)
    for member_predictions in predictions:
        np.add.at(votes, (rows, member_predictions), 1)
    # argmax keeps the lowest class code on ties
    return np.argmax(votes, axis=1)


def predict_ensemble(ensemble: Ensemble, data: Union[Dataset, Sequence]) -> Union[np.ndarray, int, float]:
    """Aggregate member predictions for a dataset (array) or a single feature row."""
    if not ensemble.members:
        raise ConfigError("ensemble has no members")
    if isinstance(data, Dataset):
        if data.schema.fingerprint != ensemble.schema_fingerprint:
            raise SchemaMismatchError("dataset schema does not match the ensemble's schema fingerprint")
        if data.row_count == 0:
            dtype = np.int64 if ensemble.task == TaskKind.CLASSIFICATION else np.float64
            return np.empty(0, dtype=dtype)
        stacked = np.vstack([
            predict_batch(member.model, data.select_features(member.features)) for member in ensemble.members
        ])
        return aggregate(ensemble, stacked)

    stacked = np.array([
        [predict_one(member.model, [data[f] for f in member.features])] for member in ensemble.members
    ])
    value = aggregate(ensemble, stacked)[0]
    return int(value) if ensemble.task == TaskKind.CLASSIFICATION else float(value)


# Ensemble documents

def ensemble_to_document(ensemble: Ensemble) -> Dict[str, Any]:
    document = {
        "format_version": FORMAT_VERSION,
        "kind": ENSEMBLE_KIND,
        "task": ensemble.task.value,
        "schema_fingerprint": ensemble.schema_fingerprint,
        "aggregation": ensemble.aggregation.value,
        "config": dict(ensemble.config),
        "members": [
            {"features": list(member.features), "model": model_to_document(member.model)}
            for member in ensemble.members
        ],
    }
    if ensemble.num_classes is not None:
        document["num_classes"] = ensemble.num_classes
    if ensemble.schema is not None:
        document["schema"] = schema_to_dict(ensemble.schema)
    return document


def ensemble_from_document(document: Dict[str, Any]) -> Ensemble:
    if not isinstance(document, dict) or document.get("kind") != ENSEMBLE_KIND:
        raise ModelFormatError("not an ensemble document")
    if document.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {document.get('format_version')!r}")
    if not document.get("schema_fingerprint"):
        raise ModelFormatError("ensemble document has no schema_fingerprint")
    try:
        members = [
            EnsembleMember(tuple(int(f) for f in entry["features"]), model_from_document(entry["model"]))
            for entry in document["members"]
        ]
        num_classes = document.get("num_classes")
        return Ensemble(
            members=members,
            task=TaskKind(document["task"]),
            num_classes=int(num_classes) if num_classes is not None else None,
            schema_fingerprint=document["schema_fingerprint"],
            config=dict(document.get("config", {})),
            schema=schema_from_dict(document["schema"]) if "schema" in document else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise ModelFormatError(f"malformed ensemble document: {e}") from e


def serialize_ensemble(ensemble: Ensemble) -> str:
    return json.dumps(ensemble_to_document(ensemble), indent=2, sort_keys=True) + "\n"


def deserialize_ensemble(text: str) -> Ensemble:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"ensemble file is not valid JSON: {e}") from e
    return ensemble_from_document(document)


def save_ensemble(ensemble: Ensemble, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_ensemble(ensemble))
    logger.info(f"Saved ensemble of {len(ensemble.members)} members to {path}")


def load_predictor(path) -> Union[DsModel, Ensemble]:
    """Model or ensemble, whichever the file holds."""
    document = read_document(path)
    if isinstance(document, dict) and document.get("kind") == ENSEMBLE_KIND:
        return ensemble_from_document(document)
    return model_from_document(document)


def predict_dataset(predictor: Union[DsModel, Ensemble], dataset: Dataset) -> np.ndarray:
    if isinstance(predictor, Ensemble):
        return predict_ensemble(predictor, dataset)
    return predict_batch(predictor, dataset)
