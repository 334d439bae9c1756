"""Frame in, people count out: the full per-frame pipeline.

Stages: ground/ROI filtering -> k-distance elbow -> density clustering ->
per-cluster classification (feature autoencoder or projection net, float or
8-bit) -> count.  Everything is deterministic given the frame, the model
file and the seed; padding draws for undersized clusters are re-derived per
(seed, frame, cluster), so streaming a file twice produces byte-identical
reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .clustering import DbscanParams, choose_epsilon, dbscan, extract_clusters
from .config import DEFAULT_CONFIG, PipelineConfig
from .features import FeatureStats, SliceSpec, apply_normalizer, extract_features
from .frames import Frame
from .nn.archs import reconstruction_error
from .nn.model import Model, forward
from .projection import TARGET_POINTS, classifier_image
from .quantize import (
    QuantizedModel,
    quantized_forward,
    quantized_reconstruction_error,
)


class PipelineStageError(RuntimeError):
    """A pipeline stage could not run; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class CountReport:
    """Per-frame outcome, JSON-friendly via :meth:`to_dict`."""

    frame_id: int
    timestamp: float
    n_raw: int
    n_points: int
    epsilon: float
    elbow_degenerate: bool
    n_clusters: int
    n_noise: int
    cluster_sizes: tuple[int, ...]
    person: tuple[int, ...]
    scores: tuple[float, ...]
    n_people: int

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "timestamp": self.timestamp,
            "n_raw": self.n_raw,
            "n_points": self.n_points,
            "epsilon": self.epsilon,
            "elbow_degenerate": self.elbow_degenerate,
            "n_clusters": self.n_clusters,
            "n_noise": self.n_noise,
            "cluster_sizes": list(self.cluster_sizes),
            "person": list(self.person),
            "scores": list(self.scores),
            "n_people": self.n_people,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def model_input_kind(model: Model | QuantizedModel) -> str:
    """"features" for 1-d (vector) models, "images" for 3-d (H, W, C) ones."""
    ndim = len(model.spec.input_shape)
    if ndim == 1:
        return "features"
    if ndim == 3:
        return "images"
    raise PipelineStageError(
        "classify", f"unsupported model input shape {model.spec.input_shape}"
    )


def _normalizer_from_metadata(model) -> FeatureStats:
    meta = model.metadata or {}
    mean = meta.get("normalizer_mean")
    std = meta.get("normalizer_std")
    if mean is None or std is None:
        raise PipelineStageError(
            "classify", "feature model file carries no normalizer statistics"
        )
    return FeatureStats(np.asarray(mean, dtype=np.float64), np.asarray(std, dtype=np.float64))


def _classify_features(model, clusters, slice_dz: float):
    spec = SliceSpec(dz=slice_dz)
    vectors = np.stack([extract_features(c, spec) for c in clusters])
    vectors = apply_normalizer(vectors, _normalizer_from_metadata(model))
    if model.threshold is None:
        raise PipelineStageError("classify", "feature model file carries no threshold")
    if isinstance(model, QuantizedModel):
        errors = quantized_reconstruction_error(model, vectors)
    else:
        errors = reconstruction_error(model, vectors)
    errors = np.atleast_1d(np.asarray(errors, dtype=np.float64))
    person = (errors <= model.threshold).astype(np.int64)
    return person, errors


def _classify_images(model, clusters, pool, seed: int, frame_id: int):
    if pool is None or len(pool) == 0:
        # Tiling brings a cluster to (target // n) * n rows; only a multiple
        # of the target needs no padding rows from the pool.
        needs_pad = [
            c.shape[0] * max(1, TARGET_POINTS // max(1, c.shape[0])) < TARGET_POINTS
            for c in clusters
        ]
        if any(needs_pad):
            raise PipelineStageError(
                "classify",
                "projection model needs a background pool to pad clusters",
            )
        pool = np.zeros((1, 3))  # never sampled
    images = []
    for ci, cluster in enumerate(clusters):
        pad_seed = int(
            np.random.SeedSequence([seed, frame_id & 0xFFFFFFFF, ci]).generate_state(
                1, np.uint64
            )[0]
        )
        images.append(classifier_image(cluster, pool, pad_seed))
    batch = np.stack(images)
    if isinstance(model, QuantizedModel):
        _, probs = quantized_forward(model, batch)
    else:
        probs = forward(model, batch, mode="eval")
    person = (np.argmax(probs, axis=-1) == 1).astype(np.int64)
    return person, probs[:, 1]


def count_people(
    frame: Frame,
    model: Model | QuantizedModel,
    config: PipelineConfig = DEFAULT_CONFIG,
    pool: np.ndarray | None = None,
    seed: int = 0,
) -> CountReport:
    """Run the whole pipeline on one frame."""
    points = frame.points
    n_raw = points.shape[0]
    keep = (
        (points[:, 2] >= config.roi.z_min)
        & (points[:, 0] >= config.roi.x_min)
        & (points[:, 0] <= config.roi.x_max)
        & (points[:, 1] >= config.roi.y_min)
        & (points[:, 1] <= config.roi.y_max)
    )
    pts = points[keep]
    n_points = pts.shape[0]

    def empty(eps: float = 0.0, degenerate: bool = True) -> CountReport:
        return CountReport(
            frame_id=frame.frame_id,
            timestamp=frame.timestamp,
            n_raw=n_raw,
            n_points=n_points,
            epsilon=eps,
            elbow_degenerate=degenerate,
            n_clusters=0,
            n_noise=n_points,
            cluster_sizes=(),
            person=(),
            scores=(),
            n_people=0,
        )

    # choose_epsilon needs min_pts - 1 < n and a curve of length >= 3.
    if n_points < max(3, config.min_pts):
        return empty()

    elbow = choose_epsilon(pts, min_pts=config.min_pts)
    eps = float(elbow.epsilon)
    if eps <= 0.0:
        return empty(eps=eps, degenerate=elbow.degenerate)
    assignment = dbscan(pts, DbscanParams(epsilon=eps, min_pts=config.min_pts))
    clusters = extract_clusters(pts, assignment)
    n_noise = int((assignment.labels == -1).sum())
    if not clusters:
        return empty(eps=float(eps), degenerate=elbow.degenerate)

    kind = model_input_kind(model)
    if kind == "features":
        person, scores = _classify_features(model, clusters, config.slice_dz)
    else:
        person, scores = _classify_images(model, clusters, pool, seed, frame.frame_id)

    return CountReport(
        frame_id=frame.frame_id,
        timestamp=frame.timestamp,
        n_raw=n_raw,
        n_points=n_points,
        epsilon=float(eps),
        elbow_degenerate=elbow.degenerate,
        n_clusters=len(clusters),
        n_noise=n_noise,
        cluster_sizes=tuple(int(c.shape[0]) for c in clusters),
        person=tuple(int(v) for v in person),
        scores=tuple(float(s) for s in scores),
        n_people=int(person.sum()),
    )


def count_stream(
    frames: Iterable[Frame],
    model: Model | QuantizedModel,
    config: PipelineConfig = DEFAULT_CONFIG,
    pool: np.ndarray | None = None,
    seed: int = 0,
) -> Iterator[CountReport]:
    """Lazily map :func:`count_people` over a frame iterator."""
    for frame in frames:
        yield count_people(frame, model, config, pool=pool, seed=seed)
