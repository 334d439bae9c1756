"""The two cluster classifiers.

* ``autoencoder``: dense 94 -> 104 -> 72 -> 124 -> 8 -> 76 -> 84 -> 76 -> 94,
  relu everywhere except the linear output, dropout 0.1 after every hidden
  dense except the 8-wide bottleneck.  Trained on person clusters only; a
  cluster is classified by whether its reconstruction error stays under a
  threshold tuned on validation data.
* ``cnn2d``: three 3x3 conv + batchnorm + relu stages (32, 64, 64 filters,
  maxpool after the first two) shrinking 18x18x6 to 1x1x64, then dense 64,
  dense 2, softmax.  62,114 parameters in total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Model,
    ModelSpec,
    batchnorm,
    conv2d,
    dense,
    dropout,
    flatten,
    forward,
    maxpool,
    relu,
    softmax,
)

AE_WIDTHS = (104, 72, 124, 8, 76, 84, 76, 94)
AE_BOTTLENECK = 8
AE_INPUT_DIM = 94
AE_DROPOUT = 0.1
CNN_INPUT_SHAPE = (18, 18, 6)
CNN_PARAM_COUNT = 62_114


def build_autoencoder() -> ModelSpec:
    layers = []
    for width in AE_WIDTHS[:-1]:
        layers.append(dense(width))
        layers.append(relu())
        if width != AE_BOTTLENECK:
            layers.append(dropout(AE_DROPOUT))
    layers.append(dense(AE_WIDTHS[-1]))  # linear reconstruction
    return ModelSpec("autoencoder", (AE_INPUT_DIM,), tuple(layers))


def build_cnn2d() -> ModelSpec:
    layers = (
        conv2d(32),
        batchnorm(),
        relu(),
        maxpool(),
        conv2d(64),
        batchnorm(),
        relu(),
        maxpool(),
        conv2d(64),
        batchnorm(),
        relu(),
        flatten(),
        dense(64),
        dense(2),
        softmax(),
    )
    return ModelSpec("cnn2d", CNN_INPUT_SHAPE, layers)


def _require_reconstructor(model: Model) -> None:
    from .model import infer_shapes

    spec = model.spec
    out_shape = infer_shapes(spec)[-1] if spec.layers else spec.input_shape
    if out_shape != spec.input_shape:
        raise ValueError(
            f"model {spec.name!r} does not reconstruct its input "
            f"({spec.input_shape} -> {out_shape}); not an autoencoder"
        )


def reconstruction_error(model: Model, vectors) -> float | np.ndarray:
    """MSE between input and eval-mode reconstruction.

    A single vector returns a float, a batch returns one error per row.
    """
    _require_reconstructor(model)
    v = np.asarray(vectors, dtype=np.float64)
    single = v.ndim == 1
    y = forward(model, v, mode="eval")
    err = ((y - v) ** 2).mean(axis=-1)
    return float(err) if single else err


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    f1: float


def _f1(pred: np.ndarray, truth: np.ndarray) -> float:
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def choose_threshold(model: Model, vectors, labels) -> ThresholdResult:
    """Scan midpoints between sorted validation errors, maximize F1.

    Classification is ``error <= threshold -> person`` (label 1).  Ties pick
    the lowest threshold.  The validation set must contain both classes.
    """
    truth = np.asarray(labels, dtype=np.int64)
    if not (np.any(truth == 1) and np.any(truth == 0)):
        raise ValueError("validation set must contain both classes")
    errors = np.asarray(reconstruction_error(model, vectors), dtype=np.float64)
    uniq = np.unique(errors)
    if uniq.size == 1:
        # Every error identical: any threshold at/above it classifies all as
        # person; report that degenerate point with its F1.
        thr = float(uniq[0])
        return ThresholdResult(thr, _f1(np.ones_like(truth), truth))
    candidates = (uniq[:-1] + uniq[1:]) / 2.0
    best = ThresholdResult(float(candidates[0]), -1.0)
    for thr in candidates:
        f1 = _f1((errors <= thr).astype(np.int64), truth)
        if f1 > best.f1:
            best = ThresholdResult(float(thr), f1)
    return best


def classify_ae(model: Model, threshold: float, vectors) -> int | np.ndarray:
    """1 (person) iff reconstruction error <= threshold, else 0."""
    err = reconstruction_error(model, vectors)
    if isinstance(err, float):
        return int(err <= threshold)
    return (err <= threshold).astype(np.int64)


def classify_cnn(model: Model, images):
    """Argmax class and class probabilities; index 1 means person."""
    probs = forward(model, images, mode="eval")
    label = np.argmax(probs, axis=-1)
    if probs.ndim == 1:
        return int(label), probs
    return label.astype(np.int64), probs
