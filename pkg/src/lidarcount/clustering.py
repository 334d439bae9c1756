"""Density clustering with a data-driven epsilon.

The epsilon for DBSCAN is not fixed: each frame gets its own value from the
knee of the sorted k-nearest-neighbor distance curve (k = min_pts - 1), found
as the point of maximum perpendicular distance to the chord between the
curve's endpoints.  Cluster quality is scored with the mean silhouette
coefficient over non-noise points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .frames import as_points

DEFAULT_MIN_PTS = 5


class SilhouetteUndefinedError(ValueError):
    """Silhouette requested for a clustering with fewer than two clusters."""


@dataclass(frozen=True)
class DbscanParams:
    epsilon: float
    min_pts: int = DEFAULT_MIN_PTS

    def __post_init__(self):
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-point labels: -1 is noise, clusters are 0..n_clusters-1.

    ``core`` marks density-core points (at least min_pts neighbors counting
    the point itself); None when the assignment came from something other
    than a density clustering.
    """

    labels: np.ndarray
    n_clusters: int
    core: np.ndarray | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).copy()
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1:
            raise ValueError("labels must be 1-d")
        if labels.size:
            lo, hi = labels.min(), labels.max()
            if lo < -1 or hi >= self.n_clusters:
                raise ValueError(
                    f"labels must lie in [-1, {self.n_clusters}), got [{lo}, {hi}]"
                )
        used = np.unique(labels[labels >= 0])
        if used.size != self.n_clusters:
            raise ValueError(
                f"each cluster id in [0, {self.n_clusters}) must be used at least once"
            )
        if self.core is not None:
            core = np.asarray(self.core, dtype=bool).copy()
            core.setflags(write=False)
            object.__setattr__(self, "core", core)
            if core.shape != labels.shape:
                raise ValueError("core mask must match labels in shape")
            if bool((core & (labels < 0)).any()):
                raise ValueError("a core point can never be labeled noise")

    def __eq__(self, other):
        if not isinstance(other, ClusterAssignment):
            return NotImplemented
        return self.n_clusters == other.n_clusters and bool(
            np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class KDistanceCurve:
    """Sorted-decreasing k-NN distances; entry i is the i-th largest."""

    k: int
    distances: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=np.float64).copy()
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)
        if d.ndim != 1:
            raise ValueError("distances must be 1-d")
        if np.any(np.diff(d) > 0):
            raise ValueError("distances must be sorted non-increasing")
        if d.size and (not np.isfinite(d).all() or d.min() < 0):
            raise ValueError("distances must be finite and non-negative")

    def __len__(self) -> int:
        return int(self.distances.size)


@dataclass(frozen=True)
class ElbowResult:
    """Knee of a k-distance curve; ``degenerate`` flags a flat/collinear curve."""

    epsilon: float
    index: int
    degenerate: bool


def knn_distance_curve(points, k: int) -> KDistanceCurve:
    """k-th nearest neighbor distance of every point, sorted decreasing."""
    pts = as_points(points)
    d = _kernels.kth_nn_distances(pts, k)
    return KDistanceCurve(k, np.sort(d)[::-1].copy())


def find_elbow(curve: KDistanceCurve) -> ElbowResult:
    """Kneedle-style elbow: maximum perpendicular distance to the chord.

    Ties resolve toward the larger index (smaller epsilon).  A curve whose
    points are all collinear with the chord (e.g. constant) has no knee; the
    value at the tie-broken index is still returned, flagged degenerate.
    """
    y = curve.distances
    n = y.size
    if n < 3:
        raise ValueError(f"elbow needs a curve of length >= 3, got {n}")
    # Perpendicular distance to the chord scales every index equally, so the
    # constant denominator is dropped and only the numerator is compared.
    dy = y[-1] - y[0]
    num = np.abs(dy * np.arange(n) - (n - 1) * (y - y[0]))
    best = num.max()
    idx = int(n - 1 - np.argmax(num[::-1]))  # ties -> larger index
    return ElbowResult(float(y[idx]), idx, bool(best == 0.0))


def choose_epsilon(points, min_pts: int = DEFAULT_MIN_PTS) -> ElbowResult:
    """Adaptive epsilon for one frame: elbow of the (min_pts - 1)-NN curve."""
    if min_pts < 2:
        raise ValueError("adaptive epsilon needs min_pts >= 2")
    return find_elbow(knn_distance_curve(points, min_pts - 1))


def dbscan(points, params: DbscanParams) -> ClusterAssignment:
    """Density clustering with closed-ball neighborhoods (d <= epsilon).

    Core points have at least min_pts neighbors counting themselves.  Cluster
    ids follow the order of first core points in input order; border points
    reachable from several clusters join the one expanded first.
    """
    pts = as_points(points)
    labels, n_clusters, core = _kernels.dbscan_labels(
        pts, params.epsilon, params.min_pts
    )
    return ClusterAssignment(labels, n_clusters, core)


def extract_clusters(points, assignment: ClusterAssignment) -> list[np.ndarray]:
    """Per-cluster point arrays, input order preserved, noise dropped."""
    pts = as_points(points)
    if pts.shape[0] != assignment.labels.size:
        raise ValueError(
            f"points ({pts.shape[0]}) and labels ({assignment.labels.size}) disagree"
        )
    return [pts[assignment.labels == c] for c in range(assignment.n_clusters)]


def silhouette(points, assignment: ClusterAssignment) -> float:
    """Mean silhouette s(i) = (b - a) / max(a, b) over non-noise points.

    Points in singleton clusters contribute 0.  Raises
    SilhouetteUndefinedError when fewer than two clusters exist.
    """
    pts = as_points(points)
    if pts.shape[0] != assignment.labels.size:
        raise ValueError(
            f"points ({pts.shape[0]}) and labels ({assignment.labels.size}) disagree"
        )
    n_clusters = assignment.n_clusters
    if n_clusters < 2:
        raise SilhouetteUndefinedError(
            f"silhouette undefined for {n_clusters} cluster(s); need >= 2"
        )
    idx = np.flatnonzero(assignment.labels >= 0)
    sub = pts[idx]
    lab = assignment.labels[idx]
    m = idx.size
    onehot = np.zeros((m, n_clusters))
    onehot[np.arange(m), lab] = 1.0
    counts = onehot.sum(axis=0)

    sums = np.empty((m, n_clusters))
    chunk = 512
    for start in range(0, m, chunk):
        block = sub[start : start + chunk]
        delta = block[:, None, :] - sub[None, :, :]
        dist = np.sqrt((delta * delta).sum(axis=2))
        sums[start : start + block.shape[0]] = dist @ onehot

    own_counts = counts[lab]
    rows = np.arange(m)
    a = np.zeros(m)
    multi = own_counts > 1
    a[multi] = sums[rows[multi], lab[multi]] / (own_counts[multi] - 1)

    mean_other = sums / counts[None, :]
    mean_other[rows, lab] = np.inf
    b = mean_other.min(axis=1)

    denom = np.maximum(a, b)
    valid = multi & (denom > 0)
    s = np.zeros(m)
    s[valid] = (b[valid] - a[valid]) / denom[valid]
    return float(s.mean())
