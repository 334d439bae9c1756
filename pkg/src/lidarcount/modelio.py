"""Single-line JSON persistence for float and 8-bit models.

A model file is one JSON object on one line:

    {"format_version": 1, "model_type": "<spec name>", "quantized": false,
     "input_shape": [...], "layers": [{"spec": {...}, "params": {...}}, ...],
     "threshold": null, "metadata": {...}}

Float parameters are stored as nested lists (json round-trips Python floats
bit for bit).  Quantized files store each tensor as base64 uint8 bytes with
its shape, scale and zero point, plus the per-layer activation grids under
an ``"activations"`` key.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .nn.model import LayerSpec, Model, ModelSpec
from .quantize import QTensor, QuantParams, QuantizedModel

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file cannot be parsed."""


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _qtensor_doc(qt: QTensor) -> dict:
    return {
        "shape": list(qt.data.shape),
        "scale": qt.params.scale,
        "zero_point": qt.params.zero_point,
        "data": base64.b64encode(qt.data.tobytes()).decode("ascii"),
    }


def _qtensor_from_doc(doc: dict) -> QTensor:
    raw = base64.b64decode(doc["data"])
    data = np.frombuffer(raw, dtype=np.uint8).reshape(doc["shape"]).copy()
    return QTensor(data, QuantParams(float(doc["scale"]), int(doc["zero_point"])))


def save_model(model: Model | QuantizedModel, path: str) -> None:
    quantized = isinstance(model, QuantizedModel)
    layers = []
    for layer, params in zip(
        model.spec.layers, model.weights if quantized else model.params
    ):
        if quantized:
            pdoc = {k: _qtensor_doc(v) for k, v in params.items()}
        else:
            pdoc = {k: np.asarray(v, dtype=np.float64).tolist() for k, v in params.items()}
        layers.append({"spec": layer.to_dict(), "params": pdoc})
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "model_type": model.spec.name,
        "quantized": quantized,
        "input_shape": list(model.spec.input_shape),
        "layers": layers,
        "threshold": model.threshold,
        "metadata": _jsonable(model.metadata),
    }
    if quantized:
        doc["activations"] = [
            {"scale": qp.scale, "zero_point": qp.zero_point} for qp in model.activations
        ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, separators=(",", ":")) + "\n")


def load_model(path: str) -> Model | QuantizedModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: expected a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format_version {version!r}")
    for key in ("model_type", "quantized", "input_shape", "layers"):
        if key not in doc:
            raise ModelFormatError(f"{path}: missing key {key!r}")
    try:
        specs = tuple(LayerSpec(**entry["spec"]) for entry in doc["layers"])
        spec = ModelSpec(doc["model_type"], tuple(doc["input_shape"]), specs)
    except (TypeError, ValueError, KeyError) as exc:
        raise ModelFormatError(f"{path}: bad layer spec ({exc})") from None
    threshold = doc.get("threshold")
    threshold = None if threshold is None else float(threshold)
    metadata = doc.get("metadata") or {}
    if doc["quantized"]:
        if "activations" not in doc:
            raise ModelFormatError(f"{path}: quantized model missing activations")
        weights = [
            {k: _qtensor_from_doc(v) for k, v in entry["params"].items()}
            for entry in doc["layers"]
        ]
        acts = [
            QuantParams(float(a["scale"]), int(a["zero_point"]))
            for a in doc["activations"]
        ]
        return QuantizedModel(spec, weights, acts, threshold=threshold, metadata=metadata)
    params = [
        {k: np.asarray(v, dtype=np.float64) for k, v in entry["params"].items()}
        for entry in doc["layers"]
    ]
    return Model(spec, params, threshold=threshold, metadata=metadata).finalize()
