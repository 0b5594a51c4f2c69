"""JSON documents: instances, solutions and reports."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .instance import Instance, line_metric, validate_metric

FORMAT_VERSION = 1


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dumps(doc) -> str:
    return json.dumps(_plain(doc), indent=1, sort_keys=True) + "\n"


def instance_to_doc(inst: Instance) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "instance",
        "m": inst.m,
        "dist": inst.dist,
        "weights": inst.weights,
        "k": inst.k,
        "p": inst.p,
        "q": inst.q,
    }
    if inst.name:
        doc["name"] = inst.name
    return doc


def instance_from_doc(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InputError("instance document must be an object")
    missing = [f for f in ("weights", "k", "p", "q") if f not in doc]
    if missing:
        raise InputError(f"instance document missing fields {missing}")
    if ("dist" in doc) == ("coords" in doc):
        raise InputError("instance document needs exactly one of 'dist' or 'coords'")
    try:
        if "dist" in doc:
            metric = validate_metric(np.asarray(doc["dist"], dtype=float))
        else:
            coords = np.asarray(doc["coords"], dtype=float)
            if coords.ndim != 1:
                raise InputError("coords must be a 1-D list")
            metric = line_metric(coords)
        weights = np.asarray(doc["weights"], dtype=float)
    except (TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"malformed instance document: {e}") from e
    if "m" in doc and int(doc["m"]) != metric.m:
        raise InputError(f"m={doc['m']} does not match the metric size {metric.m}")
    k = doc["k"]
    if not isinstance(k, int) or isinstance(k, bool):
        raise InputError("k must be an integer")
    return Instance(metric, weights, k, float(doc["p"]), float(doc["q"]), str(doc.get("name", "")))


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: not valid JSON: {e}") from e
    inst = instance_from_doc(doc)
    if not inst.name:
        inst = inst.with_params(name=path.stem)
    return inst


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps(instance_to_doc(inst)))


def instance_hash(inst: Instance) -> str:
    doc = instance_to_doc(inst)
    doc.pop("name", None)
    return hashlib.sha256(dumps(doc).encode()).hexdigest()[:16]
