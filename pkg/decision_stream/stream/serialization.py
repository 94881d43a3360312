"""JSON model documents with canonical node numbering."""
import json
import logging
from typing import Any, Dict

from ..data.schema import schema_from_dict, schema_to_dict
from ..exceptions import DataError, ModelFormatError
from .graph import DsModel, DsNode, NodeStats, TaskKind, canonicalize
from .rules import rule_from_dict

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _stats_to_dict(stats: NodeStats) -> Dict[str, Any]:
    if stats.class_histogram is not None:
        return {"sample_count": stats.sample_count, "class_histogram": list(stats.class_histogram)}
    return {"sample_count": stats.sample_count, "mean": stats.mean, "m2": stats.m2}


def _stats_from_dict(document: Dict[str, Any]) -> NodeStats:
    if "class_histogram" in document:
        return NodeStats(int(document["sample_count"]), class_histogram=tuple(int(c) for c in document["class_histogram"]))
    return NodeStats(int(document["sample_count"]), mean=float(document["mean"]), m2=float(document["m2"]))


def model_to_document(model: DsModel) -> Dict[str, Any]:
    model = canonicalize(model)
    nodes = []
    for node_id in sorted(model.nodes):
        node = model.nodes[node_id]
        entry = {
            "id": node.id,
            "parents": sorted(node.parents),
            "children": list(node.children),
            "terminal": node.terminal,
            "stats": _stats_to_dict(node.stats),
            "prediction": node.prediction,
        }
        if node.rule is not None:
            entry["rule"] = node.rule.to_dict()
        nodes.append(entry)

    document = {
        "format_version": FORMAT_VERSION,
        "task": model.task.value,
        "schema_fingerprint": model.schema_fingerprint,
        "n_features": model.n_features,
        "config": dict(model.config),
        "root": model.root_id,
        "nodes": nodes,
    }
    if model.num_classes is not None:
        document["num_classes"] = model.num_classes
    if model.schema is not None:
        document["schema"] = schema_to_dict(model.schema)
    return document


def model_from_document(document: Dict[str, Any]) -> DsModel:
    if not isinstance(document, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    if not document.get("schema_fingerprint"):
        raise ModelFormatError("model document has no schema_fingerprint")

    try:
        task = TaskKind(document["task"])
        num_classes = document.get("num_classes")
        nodes = {}
        for entry in document["nodes"]:
            node_id = int(entry["id"])
            if node_id in nodes:
                raise ModelFormatError(f"duplicate node id {node_id}")
            prediction = entry["prediction"]
            if prediction is not None:
                prediction = int(prediction) if task == TaskKind.CLASSIFICATION else float(prediction)
            nodes[node_id] = DsNode(
                id=node_id,
                parents={int(p) for p in entry["parents"]},
                rule=rule_from_dict(entry["rule"]) if entry.get("rule") is not None else None,
                children=[int(c) for c in entry["children"]],
                terminal=bool(entry["terminal"]),
                stats=_stats_from_dict(entry["stats"]),
                prediction=prediction,
            )
        root_id = int(document["root"])
        schema = schema_from_dict(document["schema"]) if "schema" in document else None
        model = DsModel(
            task=task,
            num_classes=int(num_classes) if num_classes is not None else None,
            root_id=root_id,
            nodes=nodes,
            schema_fingerprint=document["schema_fingerprint"],
            n_features=int(document["n_features"]),
            config=dict(document.get("config", {})),
            schema=schema,
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise ModelFormatError(f"malformed model document: {e}") from e

    if root_id not in nodes:
        raise ModelFormatError(f"dangling reference: root {root_id} is not a node")
    for node in nodes.values():
        missing = sorted({ref for ref in list(node.children) + list(node.parents) if ref not in nodes})
        if missing:
            raise ModelFormatError(f"dangling reference: node {node.id} points at {missing}")
    return model


def serialize(model: DsModel) -> str:
    return json.dumps(model_to_document(model), indent=2, sort_keys=True) + "\n"


def deserialize(text: str) -> DsModel:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"model file is not valid JSON: {e}") from e
    return model_from_document(document)


def save_model(model: DsModel, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize(model))
    logger.info(f"Saved model with {len(model.nodes)} nodes to {path}")


def read_document(path) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as e:
        raise DataError(f"model file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path} is not valid JSON: {e}") from e


def load_model(path) -> DsModel:
    return model_from_document(read_document(path))
