"""Training loop (Adam, seeded shuffling) and finite-difference checking.

Everything is deterministic given the config seed: initialization, epoch
shuffles and dropout masks draw from three independent streams spawned from
it, so identical configs reproduce identical weights bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    TRAINABLE_KEYS,
    Model,
    ModelSpec,
    _backward,
    _forward,
    init_params,
)

LOSSES = ("mse", "softmax_cross_entropy")


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.001
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    seed: int = 0
    loss: str = "mse"

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def mse_loss(y: np.ndarray, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over every element; gradient w.r.t. y."""
    diff = y - t
    return float((diff * diff).mean()), (2.0 / diff.size) * diff


def softmax_ce_from_logits(logits: np.ndarray, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Cross-entropy straight from logits (stable log-sum-exp form).

    Returns the batch-mean loss and its gradient w.r.t. the logits, i.e. the
    usual fused (probs - targets) / N shortcut past the softmax layer.
    """
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    n = logits.shape[0]
    loss = float(-(t * log_probs).sum() / n)
    probs = np.exp(log_probs)
    return loss, (probs - t) / n


def _uses_fused_softmax(spec: ModelSpec, loss: str) -> bool:
    if loss != "softmax_cross_entropy":
        return False
    if not spec.layers or spec.layers[-1].kind != "softmax":
        raise ValueError("softmax_cross_entropy expects the model to end in softmax")
    return True


class Adam:
    """Per-tensor Adam with bias correction; epsilon added after the sqrt."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m: dict[tuple[int, str], np.ndarray] = {}
        self.v: dict[tuple[int, str], np.ndarray] = {}

    def step(self, params: list[dict], grads: list[dict], spec: ModelSpec) -> None:
        cfg = self.cfg
        self.t += 1
        b1t = 1.0 - cfg.beta1**self.t
        b2t = 1.0 - cfg.beta2**self.t
        for i, layer in enumerate(spec.layers):
            for key in TRAINABLE_KEYS.get(layer.kind, ()):
                g = grads[i][key]
                slot = (i, key)
                if slot not in self.m:
                    self.m[slot] = np.zeros_like(g)
                    self.v[slot] = np.zeros_like(g)
                self.m[slot] = cfg.beta1 * self.m[slot] + (1.0 - cfg.beta1) * g
                self.v[slot] = cfg.beta2 * self.v[slot] + (1.0 - cfg.beta2) * (g * g)
                m_hat = self.m[slot] / b1t
                v_hat = self.v[slot] / b2t
                params[i][key] = params[i][key] - cfg.learning_rate * m_hat / (
                    np.sqrt(v_hat) + cfg.eps
                )


def _loss_and_grad(model, xb, tb, loss, rng):
    fused = _uses_fused_softmax(model.spec, loss)
    y, caches = _forward(model, xb, training=True, rng=rng)
    if fused:
        logits = caches[-1][1]
        value, grad = softmax_ce_from_logits(logits, tb)
        grads = _backward(model, caches, grad, upto=len(model.spec.layers) - 1)
    else:
        value, grad = mse_loss(y, tb)
        grads = _backward(model, caches, grad)
    return value, grads


def train(
    spec: ModelSpec,
    inputs,
    targets,
    cfg: TrainConfig,
    metadata: dict | None = None,
) -> tuple[Model, list[float]]:
    """Train from scratch; returns the model and per-epoch mean loss."""
    x = np.asarray(inputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    n = x.shape[0]
    if n == 0 or t.shape[0] != n:
        raise ValueError("inputs and targets must be non-empty and aligned")
    if x.shape[1:] != tuple(spec.input_shape):
        raise ValueError(
            f"input shape {x.shape[1:]} does not match spec {spec.input_shape}"
        )
    init_ss, shuffle_ss, dropout_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    model = Model(
        spec,
        init_params(spec, np.random.default_rng(init_ss)),
        metadata=dict(metadata or {}),
    )
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)
    adam = Adam(cfg)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            sel = perm[start : start + cfg.batch_size]
            value, grads = _loss_and_grad(model, x[sel], t[sel], cfg.loss, dropout_rng)
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss {value} at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            adam.step(model.params, grads, spec)
            total += value * sel.size
        history.append(total / n)
    model.metadata.setdefault("loss", cfg.loss)
    return model.finalize(), history


def gradient_check(spec: ModelSpec, seed: int, n_samples: int = 4, step: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients.

    Builds a small random instance (standard init, standard-normal inputs,
    random targets), differentiates the deterministic train-mode path
    (dropout off, batchnorm on batch statistics), and perturbs every
    trainable scalar by +-step.
    """
    rng = np.random.default_rng(seed)
    model = Model(spec, init_params(spec, rng))
    x = rng.standard_normal((n_samples, *spec.input_shape))
    loss = "softmax_cross_entropy" if spec.layers[-1].kind == "softmax" else "mse"
    fused = _uses_fused_softmax(spec, loss)

    def eval_loss() -> float:
        y, caches = _forward(model, x, training=True, rng=None, update_stats=False)
        if fused:
            return softmax_ce_from_logits(caches[-1][1], t)[0]
        return mse_loss(y, t)[0]

    y_tmp, _ = _forward(model, x, training=True, rng=None, update_stats=False)
    if fused:
        t = np.zeros((n_samples, y_tmp.shape[-1]))
        t[np.arange(n_samples), rng.integers(0, y_tmp.shape[-1], size=n_samples)] = 1.0
    else:
        t = rng.standard_normal(y_tmp.shape)

    y, caches = _forward(model, x, training=True, rng=None, update_stats=False)
    if fused:
        _, grad = softmax_ce_from_logits(caches[-1][1], t)
        grads = _backward(model, caches, grad, upto=len(spec.layers) - 1)
    else:
        _, grad = mse_loss(y, t)
        grads = _backward(model, caches, grad)

    worst = 0.0
    for i, layer in enumerate(spec.layers):
        for key in TRAINABLE_KEYS.get(layer.kind, ()):
            tensor = model.params[i][key]
            analytic = grads[i][key]
            flat = tensor.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                hi = eval_loss()
                flat[j] = orig - step
                lo = eval_loss()
                flat[j] = orig
                numeric = (hi - lo) / (2.0 * step)
                a = analytic.reshape(-1)[j]
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
                worst = max(worst, err)
    return worst
