"""Minimal dense/conv network engine on plain numpy.

Layer kinds: dense, conv2d (no padding), batchnorm, relu, maxpool, dropout
(inverted, seeded), softmax, flatten.  Tensors are batch-first, conv tensors
channels-last (N, H, W, C), all float64.  ``forward`` in train mode returns
the per-layer caches that ``backward`` consumes; parameters live outside the
layer code in a plain list of dicts so that serialization and quantization
can treat them uniformly.

The parameter count of a batchnorm layer includes its moving statistics
(gamma, beta, moving mean, moving variance: 4 per channel), matching how
deployment frameworks report model size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

LAYER_KINDS = (
    "dense",
    "conv2d",
    "batchnorm",
    "relu",
    "maxpool",
    "dropout",
    "softmax",
    "flatten",
)

BN_EPS = 1e-5
BN_MOMENTUM = 0.99


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    units: int | None = None  # dense
    filters: int | None = None  # conv2d
    kernel_size: int = 3
    stride: int = 1
    pool_size: int = 2
    rate: float = 0.0  # dropout

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "dense" and (self.units is None or self.units < 1):
            raise ValueError("dense layer needs units >= 1")
        if self.kind == "conv2d":
            if self.filters is None or self.filters < 1:
                raise ValueError("conv2d layer needs filters >= 1")
            if self.kernel_size < 1 or self.stride < 1:
                raise ValueError("conv2d needs kernel_size >= 1 and stride >= 1")
        if self.kind == "maxpool" and self.pool_size < 1:
            raise ValueError("maxpool needs pool_size >= 1")
        if self.kind == "dropout" and not 0.0 <= self.rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def dense(units: int) -> LayerSpec:
    return LayerSpec("dense", units=units)


def conv2d(filters: int, kernel_size: int = 3, stride: int = 1) -> LayerSpec:
    return LayerSpec("conv2d", filters=filters, kernel_size=kernel_size, stride=stride)


def batchnorm() -> LayerSpec:
    return LayerSpec("batchnorm")


def relu() -> LayerSpec:
    return LayerSpec("relu")


def maxpool(pool_size: int = 2) -> LayerSpec:
    return LayerSpec("maxpool", pool_size=pool_size)


def dropout(rate: float) -> LayerSpec:
    return LayerSpec("dropout", rate=rate)


def softmax() -> LayerSpec:
    return LayerSpec("softmax")


def flatten() -> LayerSpec:
    return LayerSpec("flatten")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        infer_shapes(self)  # raises if any consecutive pair is incompatible


def infer_shapes(spec: ModelSpec) -> list[tuple[int, ...]]:
    """Output shape after each layer; validates the whole chain."""
    shape = tuple(spec.input_shape)
    out = []
    for i, layer in enumerate(spec.layers):
        k = layer.kind
        if k == "dense":
            if len(shape) != 1:
                raise ValueError(f"layer {i} (dense): needs 1-d input, got {shape}")
            shape = (layer.units,)
        elif k == "conv2d":
            if len(shape) != 3:
                raise ValueError(f"layer {i} (conv2d): needs (H, W, C) input, got {shape}")
            h, w, _ = shape
            ks, st = layer.kernel_size, layer.stride
            if h < ks or w < ks:
                raise ValueError(f"layer {i} (conv2d): kernel {ks} exceeds input {shape}")
            if (h - ks) % st or (w - ks) % st:
                raise ValueError(f"layer {i} (conv2d): stride {st} does not tile {shape}")
            shape = ((h - ks) // st + 1, (w - ks) // st + 1, layer.filters)
        elif k == "maxpool":
            if len(shape) != 3:
                raise ValueError(f"layer {i} (maxpool): needs (H, W, C) input, got {shape}")
            h, w, c = shape
            p = layer.pool_size
            if h % p or w % p:
                raise ValueError(f"layer {i} (maxpool): pool {p} does not tile {shape}")
            shape = (h // p, w // p, c)
        elif k == "flatten":
            shape = (int(np.prod(shape)),)
        elif k == "softmax":
            if len(shape) != 1:
                raise ValueError(f"layer {i} (softmax): needs 1-d input, got {shape}")
        elif k in ("batchnorm", "relu", "dropout"):
            pass
        out.append(shape)
    return out


def count_params(spec: ModelSpec) -> int:
    """Total parameters, counting batchnorm moving statistics."""
    total = 0
    shape = tuple(spec.input_shape)
    for layer, out_shape in zip(spec.layers, infer_shapes(spec)):
        if layer.kind == "dense":
            total += shape[0] * layer.units + layer.units
        elif layer.kind == "conv2d":
            total += layer.kernel_size * layer.kernel_size * shape[2] * layer.filters
            total += layer.filters
        elif layer.kind == "batchnorm":
            total += 4 * shape[-1]
        shape = out_shape
    return total


@dataclass
class Model:
    """A spec plus its parameter arrays (one dict per layer, may be empty)."""

    spec: ModelSpec
    params: list[dict[str, np.ndarray]]
    threshold: float | None = None
    metadata: dict = field(default_factory=dict)

    def finalize(self) -> "Model":
        for p in self.params:
            for arr in p.values():
                arr.setflags(write=False)
        return self


def _followed_by_relu(layers, i: int) -> bool:
    for nxt in layers[i + 1 :]:
        if nxt.kind in ("batchnorm", "dropout", "maxpool", "flatten"):
            continue
        return nxt.kind == "relu"
    return False


def init_params(spec: ModelSpec, seed_or_rng) -> list[dict[str, np.ndarray]]:
    """He-uniform for layers feeding a relu, Glorot-uniform otherwise."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    shapes = [tuple(spec.input_shape)] + infer_shapes(spec)
    params: list[dict[str, np.ndarray]] = []
    for i, layer in enumerate(spec.layers):
        in_shape = shapes[i]
        if layer.kind == "dense":
            fan_in, fan_out = in_shape[0], layer.units
            limit = (
                math.sqrt(6.0 / fan_in)
                if _followed_by_relu(spec.layers, i)
                else math.sqrt(6.0 / (fan_in + fan_out))
            )
            params.append(
                {
                    "w": rng.uniform(-limit, limit, size=(fan_in, fan_out)),
                    "b": np.zeros(fan_out),
                }
            )
        elif layer.kind == "conv2d":
            ks, cin, f = layer.kernel_size, in_shape[2], layer.filters
            fan_in = ks * ks * cin
            fan_out = ks * ks * f
            limit = (
                math.sqrt(6.0 / fan_in)
                if _followed_by_relu(spec.layers, i)
                else math.sqrt(6.0 / (fan_in + fan_out))
            )
            params.append(
                {
                    "w": rng.uniform(-limit, limit, size=(ks, ks, cin, f)),
                    "b": np.zeros(f),
                }
            )
        elif layer.kind == "batchnorm":
            c = in_shape[-1]
            params.append(
                {
                    "gamma": np.ones(c),
                    "beta": np.zeros(c),
                    "moving_mean": np.zeros(c),
                    "moving_var": np.ones(c),
                }
            )
        else:
            params.append({})
    return params


TRAINABLE_KEYS = {"dense": ("w", "b"), "conv2d": ("w", "b"), "batchnorm": ("gamma", "beta")}


def _im2col(x: np.ndarray, ks: int, stride: int) -> np.ndarray:
    # (N, H, W, C) -> (N, OH, OW, ks*ks*C) with window-major (kh, kw, c) order,
    # matching w.reshape(ks*ks*C, F).
    win = np.lib.stride_tricks.sliding_window_view(x, (ks, ks), axis=(1, 2))
    if stride != 1:
        win = win[:, ::stride, ::stride]
    n, oh, ow = win.shape[:3]
    cols = win.transpose(0, 1, 2, 4, 5, 3)  # (N, OH, OW, kh, kw, C)
    return np.ascontiguousarray(cols).reshape(n, oh, ow, -1)


def _pool_windows(x: np.ndarray, p: int) -> np.ndarray:
    n, h, w, c = x.shape
    xr = x.reshape(n, h // p, p, w // p, p, c)
    return xr.transpose(0, 1, 3, 5, 2, 4).reshape(n, h // p, w // p, c, p * p)


def _forward(
    model: Model,
    x: np.ndarray,
    training: bool,
    rng=None,
    update_stats=True,
    act_hook=None,
):
    """Run the net over a batch. Returns (output, caches).

    In training mode batchnorm uses batch statistics (and, when
    ``update_stats``, updates the moving ones) and dropout applies only when
    an ``rng`` is supplied; with ``rng=None`` the train-mode path is fully
    deterministic, which is what gradient checking differentiates.

    ``act_hook(i, y)``, when given, may observe or replace the output of
    layer i (quantization uses this to record ranges and to round-trip
    activations through the 8-bit grid).
    """
    caches: list[tuple] = []
    for i, (layer, params) in enumerate(zip(model.spec.layers, model.params)):
        k = layer.kind
        if k == "dense":
            y = x @ params["w"] + params["b"]
            caches.append((x,))
        elif k == "conv2d":
            cols = _im2col(x, layer.kernel_size, layer.stride)
            n, oh, ow, kdim = cols.shape
            f = layer.filters
            y = cols.reshape(-1, kdim) @ params["w"].reshape(kdim, f)
            y = y.reshape(n, oh, ow, f) + params["b"]
            caches.append((x.shape, cols))
        elif k == "batchnorm":
            axes = tuple(range(x.ndim - 1))
            if training:
                mu = x.mean(axis=axes)
                var = x.var(axis=axes)
                if update_stats:
                    params["moving_mean"] *= BN_MOMENTUM
                    params["moving_mean"] += (1.0 - BN_MOMENTUM) * mu
                    params["moving_var"] *= BN_MOMENTUM
                    params["moving_var"] += (1.0 - BN_MOMENTUM) * var
            else:
                mu = params["moving_mean"]
                var = params["moving_var"]
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (x - mu) * inv_std
            y = params["gamma"] * xhat + params["beta"]
            n_eff = int(np.prod([x.shape[a] for a in axes])) if axes else 1
            caches.append((xhat, inv_std, n_eff, axes))
        elif k == "relu":
            y = np.maximum(x, 0.0)
            caches.append((x > 0.0,))
        elif k == "maxpool":
            p = layer.pool_size
            windows = _pool_windows(x, p)
            idx = windows.argmax(axis=-1)
            y = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
            caches.append((x.shape, idx))
        elif k == "dropout":
            if training and rng is not None and layer.rate > 0.0:
                keep = rng.random(x.shape) >= layer.rate
                scale = 1.0 / (1.0 - layer.rate)
                y = x * keep * scale
                caches.append((keep, scale))
            else:
                y = x
                caches.append((None, 1.0))
        elif k == "softmax":
            shifted = x - x.max(axis=-1, keepdims=True)
            e = np.exp(shifted)
            y = e / e.sum(axis=-1, keepdims=True)
            caches.append((y, x))
        elif k == "flatten":
            y = x.reshape(x.shape[0], -1)
            caches.append((x.shape,))
        else:  # pragma: no cover
            raise AssertionError(k)
        if act_hook is not None:
            y = act_hook(i, y)
        x = y
    return x, caches


def forward(model: Model, x, mode: str = "eval", rng=None):
    """Public forward pass.

    ``mode="eval"`` returns the output tensor; ``mode="train"`` returns
    ``(output, caches)``.  A single sample (no batch axis) goes in and out
    unbatched.
    """
    if mode not in ("eval", "train"):
        raise ValueError(f"mode must be 'eval' or 'train', got {mode!r}")
    arr = np.asarray(x, dtype=np.float64)
    single = arr.shape == tuple(model.spec.input_shape)
    if single:
        arr = arr[None]
    if arr.shape[1:] != tuple(model.spec.input_shape):
        raise ValueError(
            f"input shape {arr.shape[1:]} does not match model {model.spec.input_shape}"
        )
    y, caches = _forward(model, arr, training=(mode == "train"), rng=rng)
    if single:
        y = y[0]
    return (y, caches) if mode == "train" else y


def _backward(model: Model, caches, grad, upto: int | None = None):
    """Gradients of every trainable tensor; ``upto`` stops before layer i."""
    grads: list[dict[str, np.ndarray]] = [{} for _ in model.spec.layers]
    layers = list(enumerate(zip(model.spec.layers, model.params, caches)))
    if upto is not None:
        layers = layers[:upto]
    for i, (layer, params, cache) in reversed(layers):
        k = layer.kind
        if k == "dense":
            (x,) = cache
            grads[i] = {"w": x.T @ grad, "b": grad.sum(axis=0)}
            grad = grad @ params["w"].T
        elif k == "conv2d":
            x_shape, cols = cache
            n, oh, ow, kdim = cols.shape
            f = layer.filters
            gmat = grad.reshape(-1, f)
            grads[i] = {
                "w": (cols.reshape(-1, kdim).T @ gmat).reshape(params["w"].shape),
                "b": gmat.sum(axis=0),
            }
            gcols = (gmat @ params["w"].reshape(kdim, f).T).reshape(
                n, oh, ow, layer.kernel_size, layer.kernel_size, x_shape[3]
            )
            gx = np.zeros(x_shape)
            st = layer.stride
            for a in range(layer.kernel_size):
                for b in range(layer.kernel_size):
                    gx[:, a : a + st * oh : st, b : b + st * ow : st, :] += gcols[
                        :, :, :, a, b, :
                    ]
            grad = gx
        elif k == "batchnorm":
            xhat, inv_std, n_eff, axes = cache
            ggamma = (grad * xhat).sum(axis=axes)
            gbeta = grad.sum(axis=axes)
            grads[i] = {"gamma": ggamma, "beta": gbeta}
            grad = (
                params["gamma"]
                * inv_std
                / n_eff
                * (n_eff * grad - gbeta - xhat * ggamma)
            )
        elif k == "relu":
            (mask,) = cache
            grad = grad * mask
        elif k == "maxpool":
            x_shape, idx = cache
            p = layer.pool_size
            n, h, w, c = x_shape
            gz = np.zeros((n, h // p, w // p, c, p * p))
            np.put_along_axis(gz, idx[..., None], grad[..., None], axis=-1)
            grad = (
                gz.reshape(n, h // p, w // p, c, p, p)
                .transpose(0, 1, 4, 2, 5, 3)
                .reshape(x_shape)
            )
        elif k == "dropout":
            keep, scale = cache
            if keep is not None:
                grad = grad * keep * scale
        elif k == "softmax":
            y, _ = cache
            grad = y * (grad - (grad * y).sum(axis=-1, keepdims=True))
        elif k == "flatten":
            (x_shape,) = cache
            grad = grad.reshape(x_shape)
    return grads
