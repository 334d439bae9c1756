"""94-dimensional hand-crafted feature vectors for person/clutter clusters.

A cluster is cut into horizontal slices 0.02 m thick (about a head length),
starting at its lowest point; the top point belongs to the last slice.  The
vector concatenates 14 whole-cluster features with 8 summary statistics of 10
per-slice features computed over the non-empty slices (14 + 10*8 = 94).

Point order never matters: extraction canonicalizes by sorting on (z, x, y)
first, so permuting the input leaves the output bit-identical.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .frames import as_points

FEATURE_DIM = 94

#: Default slice thickness in meters.
DEFAULT_SLICE_DZ = 0.02

GLOBAL_FEATURES = (
    "n_points",
    "extent_x",
    "extent_y",
    "extent_z",
    "std_x",
    "std_y",
    "std_z",
    "centroid_range_xy",
    "centroid_z",
    "density",
    "n_slices_nonempty",
    "points_per_slice",
    "frac_upper_half",
    "frac_lower_half",
)

SLICE_FEATURES = (
    "count",
    "extent_x",
    "extent_y",
    "std_x",
    "std_y",
    "dx_centroid",
    "dy_centroid",
    "radial_mean",
    "radial_max",
    "range_mean",
)

SLICE_STATS = ("mean", "std", "min", "max", "median", "p25", "p75", "iqr")

FEATURE_NAMES: tuple[str, ...] = GLOBAL_FEATURES + tuple(
    f"slice_{f}_{s}" for f in SLICE_FEATURES for s in SLICE_STATS
)


@dataclass(frozen=True)
class SliceSpec:
    dz: float = DEFAULT_SLICE_DZ

    def __post_init__(self):
        if not (self.dz > 0 and np.isfinite(self.dz)):
            raise ValueError(f"dz must be positive and finite, got {self.dz}")


@dataclass(frozen=True)
class FeatureStats:
    """Per-dimension mean and population std of a training set."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        for name in ("mean", "std"):
            v = np.asarray(getattr(self, name), dtype=np.float64).copy()
            v.setflags(write=False)
            object.__setattr__(self, name, v)
            if v.shape != (FEATURE_DIM,):
                raise ValueError(f"{name} must have shape ({FEATURE_DIM},), got {v.shape}")


def slice_cluster(cluster, spec: SliceSpec = SliceSpec()) -> list[np.ndarray]:
    """Partition points into z-slices [z_lo + i*dz, z_lo + (i+1)*dz).

    Empty interior slices are kept (as 0-row arrays); the slice list always
    spans from the lowest to the highest point.
    """
    pts = as_points(cluster)
    if pts.shape[0] == 0:
        raise ValueError("cannot slice an empty cluster")
    z = pts[:, 2]
    z_lo = z.min()
    idx = np.floor((z - z_lo) / spec.dz).astype(np.int64)
    n_slices = int(idx.max()) + 1
    return [pts[idx == i] for i in range(n_slices)]


def _slice_rows(slices, cx: float, cy: float, origin) -> np.ndarray:
    rows = []
    for s in slices:
        if s.shape[0] == 0:
            continue
        x, y = s[:, 0], s[:, 1]
        sx, sy = x.mean(), y.mean()
        radial = np.sqrt((x - sx) ** 2 + (y - sy) ** 2)
        rng = np.sqrt((x - origin[0]) ** 2 + (y - origin[1]) ** 2)
        rows.append(
            [
                s.shape[0],
                x.max() - x.min(),
                y.max() - y.min(),
                x.std(),
                y.std(),
                sx - cx,
                sy - cy,
                radial.mean(),
                radial.max(),
                rng.mean(),
            ]
        )
    return np.array(rows, dtype=np.float64)


def extract_features(
    cluster,
    spec: SliceSpec = SliceSpec(),
    sensor_origin=(0.0, 0.0, 0.0),
) -> np.ndarray:
    """Return the 94-entry feature vector for one non-empty cluster."""
    pts = as_points(cluster)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot featurize an empty cluster")
    origin = np.asarray(sensor_origin, dtype=np.float64)
    # Canonical order: makes the output invariant to input permutation.
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0], pts[:, 2]))]
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]

    ex = x.max() - x.min()
    ey = y.max() - y.min()
    ez = z.max() - z.min()
    cx, cy, cz = x.mean(), y.mean(), z.mean()
    mid_z = 0.5 * (z.min() + z.max())
    frac_upper = float(np.mean(z > mid_z))

    slices = slice_cluster(pts, spec)
    rows = _slice_rows(slices, cx, cy, origin)
    n_nonempty = rows.shape[0]

    global_block = [
        float(n),
        ex,
        ey,
        ez,
        x.std(),
        y.std(),
        z.std(),
        float(np.sqrt((cx - origin[0]) ** 2 + (cy - origin[1]) ** 2)),
        cz,
        n / (ex * ey * ez + 1e-6),
        float(n_nonempty),
        n / n_nonempty,
        frac_upper,
        1.0 - frac_upper,
    ]

    p25, p50, p75 = np.percentile(rows, [25, 50, 75], axis=0)
    stats = np.stack(
        [
            rows.mean(axis=0),
            rows.std(axis=0),
            rows.min(axis=0),
            rows.max(axis=0),
            p50,
            p25,
            p75,
            p75 - p25,
        ]
    )  # (8, 10)
    slice_block = stats.T.reshape(-1)  # feature-major: 10 features x 8 stats

    out = np.concatenate([np.array(global_block, dtype=np.float64), slice_block])
    assert out.shape == (FEATURE_DIM,)
    return out


def fit_normalizer(vectors) -> FeatureStats:
    """Per-dimension mean/std (population) over >= 2 training vectors."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != FEATURE_DIM:
        raise ValueError(f"expected (n, {FEATURE_DIM}) vectors, got {v.shape}")
    if v.shape[0] < 2:
        raise ValueError("normalizer needs at least 2 vectors")
    return FeatureStats(v.mean(axis=0), v.std(axis=0))


def apply_normalizer(vectors, stats: FeatureStats) -> np.ndarray:
    """Standardize; constant dimensions divide by 1e-8 instead of zero."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.shape[-1] != FEATURE_DIM:
        raise ValueError(f"expected trailing dimension {FEATURE_DIM}, got {v.shape}")
    return (v - stats.mean) / np.maximum(stats.std, 1e-8)


def write_feature_csv(vectors, labels) -> bytes:
    """Feature dataset as CSV: 94 named columns plus a ``label`` column."""
    v = np.asarray(vectors, dtype=np.float64)
    lab = np.asarray(labels)
    if v.ndim != 2 or v.shape[1] != FEATURE_DIM or v.shape[0] != lab.shape[0]:
        raise ValueError("vectors must be (n, 94) with one label per row")
    buf = io.StringIO()
    buf.write(",".join(FEATURE_NAMES) + ",label\n")
    for row, y in zip(v, lab):
        buf.write(",".join(repr(float(c)) for c in row))
        buf.write(f",{int(y)}\n")
    return buf.getvalue().encode("utf-8")


def read_feature_csv(data) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of write_feature_csv. Returns (vectors, labels)."""
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty feature CSV") from None
    if tuple(header) != FEATURE_NAMES + ("label",):
        raise ValueError("feature CSV header does not match the 94-column layout")
    vectors, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != FEATURE_DIM + 1:
            raise ValueError(f"line {lineno}: expected {FEATURE_DIM + 1} fields")
        vectors.append([float(c) for c in row[:-1]])
        labels.append(int(row[-1]))
    return np.array(vectors, dtype=np.float64).reshape(-1, FEATURE_DIM), np.array(
        labels, dtype=np.int64
    )
