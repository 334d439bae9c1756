"""Fixed-size cluster images for the CNN classifier.

Clusters vary in point count, so each one is first brought to exactly 324
rows: undersized clusters are padded with rows drawn (with replacement, seeded)
from a pool of background returns collected from human-free scenes, oversized
ones are downsampled without replacement.  324 is the smallest perfect square
above the largest cluster size seen in practice, letting the three coordinate
pairs (x,y), (y,z), (x,z) reshape into square 18x18 channel planes:
channels [xy0, xy1, yz0, yz1, xz0, xz1] stack top, front and side views into
an 18x18x6 image.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .frames import as_points

#: Rows every cluster is normalized to before projection.
TARGET_POINTS = 324
IMAGE_SIDE = 18
IMAGE_SHAPE = (IMAGE_SIDE, IMAGE_SIDE, 6)
CHANNEL_ORDER = ("xy0", "xy1", "yz0", "yz1", "xz0", "xz1")


def next_perfect_square(n: int) -> int:
    """Smallest perfect square >= n (exact integer arithmetic)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    r = math.isqrt(n)
    return n if r * r == n else (r + 1) * (r + 1)


def enlarge(cluster, target: int, pool, seed: int) -> np.ndarray:
    """Resize a cluster to exactly ``target`` rows (a perfect square).

    Undersized input keeps all original rows as a prefix and appends rows
    sampled with replacement from ``pool``; oversized input is downsampled
    uniformly without replacement (order preserved).  Deterministic in seed.
    """
    pts = as_points(cluster)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot enlarge an empty cluster")
    r = math.isqrt(target) if target >= 1 else 0
    if target < 1 or r * r != target:
        raise ValueError(f"target must be a perfect square >= 1, got {target}")
    if n == target:
        return pts.copy()
    rng = np.random.default_rng(seed)
    if n > target:
        keep = np.sort(rng.choice(n, size=target, replace=False))
        return pts[keep]
    pool_pts = as_points(pool)
    if pool_pts.shape[0] == 0:
        raise ValueError("ground pool is empty but padding rows are needed")
    extra = pool_pts[rng.integers(0, pool_pts.shape[0], size=target - n)]
    return np.concatenate([pts, extra], axis=0)


def project_views(points, target: int = TARGET_POINTS) -> np.ndarray:
    """Project exactly ``target`` rows into a square 3-view, 6-channel image.

    Rows are sorted by (z, x, y); each coordinate pair reshapes row-major
    into a (side, side, 2) plane; planes stack as top, front, side.
    """
    pts = as_points(points)
    side = math.isqrt(target)
    if side * side != target:
        raise ValueError(f"target must be a perfect square, got {target}")
    if pts.shape[0] != target:
        raise ValueError(f"expected exactly {target} rows, got {pts.shape[0]}")
    p = pts[np.lexsort((pts[:, 1], pts[:, 0], pts[:, 2]))]
    top = p[:, (0, 1)].reshape(side, side, 2)
    front = p[:, (1, 2)].reshape(side, side, 2)
    side_view = p[:, (0, 2)].reshape(side, side, 2)
    return np.concatenate([top, front, side_view], axis=2)


def cluster_to_image(cluster, pool, seed: int, target: int = TARGET_POINTS) -> np.ndarray:
    """enlarge + project_views in one step."""
    return project_views(enlarge(cluster, target, pool, seed), target)


def center_cluster(points) -> np.ndarray:
    """Shift a cluster so its x/y centroid is the origin; z stays absolute.

    A person looks the same anywhere on the floor, so the classifier input
    drops the ground-plane position; height above ground still matters.
    """
    pts = as_points(points).copy()
    if pts.shape[0] == 0:
        return pts
    pts[:, :2] -= pts[:, :2].mean(axis=0)
    return pts


def tile_points(points, target: int = TARGET_POINTS) -> np.ndarray:
    """Repeat rows as evenly as possible so n < target becomes exactly target.

    Sparse clusters would occupy only a sliver of the projection grid;
    repetition is a content-neutral upsampling that lets them fill it
    completely (every row appears floor(target/n) or ceil(target/n) times,
    earlier rows get the extra copy).  Inputs with n >= target pass through.
    """
    pts = as_points(points)
    n = pts.shape[0]
    if n == 0 or n >= target:
        return pts.copy()
    k, r = divmod(target, n)
    counts = np.full(n, k, dtype=np.int64)
    counts[:r] += 1
    return np.repeat(pts, counts, axis=0)


def classifier_image(cluster, pool, seed: int, target: int = TARGET_POINTS) -> np.ndarray:
    """Image the classifier consumes: center, tile, then cluster_to_image."""
    return cluster_to_image(tile_points(center_cluster(cluster), target), pool, seed, target)


def write_pool_csv(pool) -> bytes:
    """Background-point pool as a bare x,y,z CSV."""
    pts = as_points(pool)
    lines = ["x,y,z"]
    lines += [f"{float(x)!r},{float(y)!r},{float(z)!r}" for x, y, z in pts]
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_pool_csv(data) -> np.ndarray:
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    lines = [ln for ln in data.splitlines() if ln.strip()]
    if not lines or lines[0] != "x,y,z":
        raise ValueError("pool CSV must start with header x,y,z")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields")
        rows.append([float(v) for v in parts])
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def write_image_ndjson(images, labels) -> bytes:
    """Image dataset: one {"label": .., "image": [...1944 floats...]} per line."""
    imgs = np.asarray(images, dtype=np.float64)
    lab = np.asarray(labels)
    if imgs.ndim != 4 or imgs.shape[1:] != IMAGE_SHAPE or imgs.shape[0] != lab.shape[0]:
        raise ValueError(f"images must be (n, {IMAGE_SHAPE}) with one label per row")
    lines = []
    for img, y in zip(imgs, lab):
        lines.append(
            json.dumps(
                {"label": int(y), "image": [float(v) for v in img.reshape(-1)]},
                separators=(",", ":"),
            )
        )
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def read_image_ndjson(data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    images, labels = [], []
    size = int(np.prod(IMAGE_SHAPE))
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        flat = np.asarray(obj["image"], dtype=np.float64)
        if flat.shape != (size,):
            raise ValueError(f"line {lineno}: image must have {size} values")
        images.append(flat.reshape(IMAGE_SHAPE))
        labels.append(int(obj["label"]))
    return (
        np.array(images, dtype=np.float64).reshape(-1, *IMAGE_SHAPE),
        np.array(labels, dtype=np.int64),
    )
