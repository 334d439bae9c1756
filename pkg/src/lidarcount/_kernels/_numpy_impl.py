"""Vectorized reference kernels for the per-frame clustering hot path.

The compiled module (``_native``) mirrors these semantics exactly, including
floating-point evaluation order, so both backends produce identical labels
and distances:

* squared distances accumulate as ``(dx*dx + dy*dy) + dz*dz``;
* a neighborhood is the closed ball ``sqrt(d2) <= eps`` and contains the
  query point itself;
* neighbor lists are in ascending point order and the seed queue is FIFO,
  so cluster ids are numbered by first core point in input order and a
  border point reachable from several clusters joins the one expanded first.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"

_CHUNK = 512
_UNDEFINED = -2
_NOISE = -1


def _check_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    return pts


def kth_nn_distances(points, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest other point."""
    pts = _check_points(points)
    n = pts.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n_points, got k={k}, n={n}")
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        block = pts[start : start + _CHUNK]
        delta = block[:, None, :] - pts[None, :, :]
        d2 = (delta[:, :, 0] * delta[:, :, 0] + delta[:, :, 1] * delta[:, :, 1]) + (
            delta[:, :, 2] * delta[:, :, 2]
        )
        rows = np.arange(block.shape[0])
        d2[rows, start + rows] = np.inf  # exclude self
        out[start : start + block.shape[0]] = np.sqrt(
            np.partition(d2, k - 1, axis=1)[:, k - 1]
        )
    return out


def _neighbor_lists(pts: np.ndarray, eps: float) -> list[np.ndarray]:
    n = pts.shape[0]
    lists: list[np.ndarray] = []
    for start in range(0, n, _CHUNK):
        block = pts[start : start + _CHUNK]
        delta = block[:, None, :] - pts[None, :, :]
        d2 = (delta[:, :, 0] * delta[:, :, 0] + delta[:, :, 1] * delta[:, :, 1]) + (
            delta[:, :, 2] * delta[:, :, 2]
        )
        within = np.sqrt(d2) <= eps
        for r in range(block.shape[0]):
            lists.append(np.flatnonzero(within[r]).astype(np.int64))
    return lists


def dbscan_labels(points, eps: float, min_pts: int) -> tuple[np.ndarray, int, np.ndarray]:
    """Exact DBSCAN labeling. Returns (labels, n_clusters, core); noise is -1."""
    pts = _check_points(points)
    n = pts.shape[0]
    if eps <= 0 or not np.isfinite(eps):
        raise ValueError(f"eps must be positive and finite, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    labels = np.full(n, _UNDEFINED, dtype=np.int64)
    if n == 0:
        return labels, 0, np.zeros(0, dtype=bool)
    neighbors = _neighbor_lists(pts, eps)
    core = np.array([nb.size >= min_pts for nb in neighbors], dtype=bool)
    cid = 0
    for i in range(n):
        if labels[i] != _UNDEFINED:
            continue
        ni = neighbors[i]
        if ni.size < min_pts:
            labels[i] = _NOISE
            continue
        labels[i] = cid
        queue = [int(j) for j in ni if j != i]
        qi = 0
        while qi < len(queue):
            q = queue[qi]
            qi += 1
            lq = labels[q]
            if lq == _NOISE:
                labels[q] = cid  # border point claimed by this cluster
                continue
            if lq != _UNDEFINED:
                continue
            labels[q] = cid
            nq = neighbors[q]
            if nq.size >= min_pts:
                queue.extend(int(j) for j in nq)
        cid += 1
    return labels, cid, core
