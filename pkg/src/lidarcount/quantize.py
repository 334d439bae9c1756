"""Post-training 8-bit quantization with simulated-quantization inference.

Tensors map to uint8 through a per-tensor asymmetric affine scheme:
``q = clip(round(r / scale) + zero_point, 0, 255)`` with
``scale = (max - min) / 255`` and ``zero_point = round(-min / scale)``
clipped to [0, 255]; ranges are always widened to include 0 so that exact
zeros stay exact.  Rounding is numpy's round-half-to-even.

Weight ranges come from each tensor's own min/max.  Activation ranges come
from calibration: eval-mode forward passes over a representative sample set,
recording the min/max of the network input and of every layer output.
Batchnorm is folded into the preceding conv/dense layer before any of this,
which is exact up to float rounding since eval-mode batchnorm is an affine
per-channel map.

Inference is *simulated* quantization: weights and activations pass through
quantize->dequantize in float, which reproduces the rounding of an integer
pipeline while keeping the arithmetic readable.  The final softmax output is
returned in float (its input logits are already on the 8-bit grid).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn.model import (
    BN_EPS,
    Model,
    ModelSpec,
    _forward,
    count_params,
)

#: Bytes charged per stored QuantParams record (float32 scale + int32 zero point).
QUANT_PARAMS_BYTES = 8


@dataclass(frozen=True)
class QuantParams:
    scale: float
    zero_point: int

    def __post_init__(self):
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if not 0 <= self.zero_point <= 255:
            raise ValueError(f"zero_point must be in [0, 255], got {self.zero_point}")


@dataclass(frozen=True)
class QTensor:
    data: np.ndarray  # uint8, original shape
    params: QuantParams

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.uint8)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)


def make_qparams(lo: float, hi: float) -> QuantParams:
    """QuantParams for a range known to include 0 (lo <= 0 <= hi)."""
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("range must be finite")
    if lo > 0 or hi < 0:
        raise ValueError(f"range must include 0, got [{lo}, {hi}]")
    scale = (hi - lo) / 255.0
    if scale == 0.0:
        scale = 1e-8  # degenerate all-zero range
    zero_point = int(np.clip(np.round(-lo / scale), 0, 255))
    return QuantParams(float(scale), zero_point)


def quantize_tensor(tensor, lo: float, hi: float) -> QTensor:
    """Quantize to uint8 against the closed range [lo, hi] (0 inside it)."""
    params = make_qparams(lo, hi)
    t = np.asarray(tensor, dtype=np.float64)
    q = np.clip(np.round(t / params.scale) + params.zero_point, 0, 255)
    return QTensor(q.astype(np.uint8), params)


def dequantize(qt: QTensor) -> np.ndarray:
    return (qt.data.astype(np.float64) - qt.params.zero_point) * qt.params.scale


def qdq(values: np.ndarray, params: QuantParams) -> np.ndarray:
    """Round-trip float values through the 8-bit grid (simulated quantization)."""
    q = np.clip(np.round(values / params.scale) + params.zero_point, 0, 255)
    return (q - params.zero_point) * params.scale


def tensor_range(tensor) -> tuple[float, float]:
    """(min, max) widened to include 0."""
    t = np.asarray(tensor, dtype=np.float64)
    if t.size == 0:
        return 0.0, 0.0
    return min(float(t.min()), 0.0), max(float(t.max()), 0.0)


def fold_batchnorm(model: Model) -> Model:
    """Fold every batchnorm into the conv/dense layer right before it.

    Uses the moving statistics (eval semantics), so eval outputs are
    preserved up to float rounding.  Raises if a batchnorm has no foldable
    predecessor.
    """
    new_layers: list = []
    new_params: list[dict[str, np.ndarray]] = []
    for layer, params in zip(model.spec.layers, model.params):
        if layer.kind == "batchnorm":
            if not new_layers or new_layers[-1].kind not in ("conv2d", "dense"):
                raise ValueError("batchnorm must directly follow conv2d or dense to fold")
            scale = params["gamma"] / np.sqrt(params["moving_var"] + BN_EPS)
            prev = new_params[-1]
            prev["w"] = prev["w"] * scale  # broadcasts over the output axis
            prev["b"] = (prev["b"] - params["moving_mean"]) * scale + params["beta"]
            continue
        new_layers.append(layer)
        new_params.append({k: v.copy() for k, v in params.items()})
    spec = ModelSpec(model.spec.name, model.spec.input_shape, tuple(new_layers))
    return Model(spec, new_params, threshold=model.threshold, metadata=dict(model.metadata))


def calibrate(model: Model, samples) -> list[tuple[float, float]]:
    """Activation ranges: network input plus every layer output, 0 included.

    Runs one eval-mode forward per sample so results match a direct
    per-sample min/max sweep exactly.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == len(model.spec.input_shape):
        x = x[None]
    if x.shape[0] == 0:
        raise ValueError("calibration needs at least one sample")
    if x.shape[1:] != tuple(model.spec.input_shape):
        raise ValueError(
            f"sample shape {x.shape[1:]} does not match model {model.spec.input_shape}"
        )
    n_layers = len(model.spec.layers)
    lows = np.zeros(n_layers + 1)
    highs = np.zeros(n_layers + 1)

    for sample in x:
        xb = sample[None]
        lows[0] = min(lows[0], float(xb.min()))
        highs[0] = max(highs[0], float(xb.max()))

        def hook(i, y):
            lows[i + 1] = min(lows[i + 1], float(y.min()))
            highs[i + 1] = max(highs[i + 1], float(y.max()))
            return y

        _forward(model, xb, training=False, act_hook=hook)
    return [(float(lo), float(hi)) for lo, hi in zip(lows, highs)]


@dataclass
class QuantizedModel:
    """Folded spec, uint8 weight tensors, and per-activation grid params."""

    spec: ModelSpec
    weights: list[dict[str, QTensor]]
    activations: list[QuantParams]  # [input, layer 0 output, layer 1 output, ...]
    threshold: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.activations) != len(self.spec.layers) + 1:
            raise ValueError("need one activation range per layer plus the input")
        self._float_model = None

    def float_view(self) -> Model:
        """Model with dequantized weights (cached); layer math runs on this."""
        if self._float_model is None:
            params = [
                {k: dequantize(qt) for k, qt in layer.items()} for layer in self.weights
            ]
            self._float_model = Model(
                self.spec, params, threshold=self.threshold, metadata=self.metadata
            ).finalize()
        return self._float_model


def quantize_model(model: Model, representative) -> QuantizedModel:
    """Fold batchnorm, quantize weights per-tensor, calibrate activations."""
    folded = fold_batchnorm(model)
    ranges = calibrate(folded, representative)
    weights = []
    for params in folded.params:
        weights.append(
            {k: quantize_tensor(v, *tensor_range(v)) for k, v in params.items()}
        )
    activations = [make_qparams(lo, hi) for lo, hi in ranges]
    return QuantizedModel(
        folded.spec,
        weights,
        activations,
        threshold=model.threshold,
        metadata=dict(model.metadata),
    )


def quantized_forward_raw(qmodel: QuantizedModel, x) -> np.ndarray:
    """Simulated-quantization forward pass; returns the output tensor.

    The input and every layer output round-trip through their calibrated
    8-bit grids, except the final softmax which is returned in float.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.shape == tuple(qmodel.spec.input_shape)
    if single:
        arr = arr[None]
    if arr.shape[1:] != tuple(qmodel.spec.input_shape):
        raise ValueError(
            f"input shape {arr.shape[1:]} does not match model {qmodel.spec.input_shape}"
        )
    model = qmodel.float_view()
    last = len(qmodel.spec.layers) - 1

    def hook(i, y):
        if i == last and qmodel.spec.layers[i].kind == "softmax":
            return y
        return qdq(y, qmodel.activations[i + 1])

    arr = qdq(arr, qmodel.activations[0])
    y, _ = _forward(model, arr, training=False, act_hook=hook)
    return y[0] if single else y


def quantized_forward(qmodel: QuantizedModel, x):
    """Argmax class and probabilities from the quantized classifier."""
    if not qmodel.spec.layers or qmodel.spec.layers[-1].kind != "softmax":
        raise ValueError("quantized_forward needs a softmax classifier; "
                         "use quantized_forward_raw for other heads")
    probs = quantized_forward_raw(qmodel, x)
    label = np.argmax(probs, axis=-1)
    if probs.ndim == 1:
        return int(label), probs
    return label.astype(np.int64), probs


def quantized_reconstruction_error(qmodel: QuantizedModel, vectors) -> float | np.ndarray:
    """Reconstruction MSE through the quantized autoencoder."""
    v = np.asarray(vectors, dtype=np.float64)
    single = v.ndim == 1
    y = quantized_forward_raw(qmodel, v)
    err = ((y - v) ** 2).mean(axis=-1)
    return float(err) if single else err


def model_size(model: Model | QuantizedModel) -> int:
    """Parameter payload in bytes: float64-free, deployment-style accounting.

    Float models: 4 bytes per parameter (float32 storage).  Quantized
    models: 1 byte per parameter plus QUANT_PARAMS_BYTES for every stored
    QuantParams record (weight tensors and activations).
    """
    if isinstance(model, Model):
        return 4 * count_params(model.spec)
    payload = sum(qt.data.size for layer in model.weights for qt in layer.values())
    records = sum(len(layer) for layer in model.weights) + len(model.activations)
    return payload + QUANT_PARAMS_BYTES * records
