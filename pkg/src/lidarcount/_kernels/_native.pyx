# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the clustering hot path.

Semantics mirror ``_numpy_impl`` exactly (same floating-point evaluation
order, closed-ball membership, ascending neighbor order, FIFO expansion), so
labels and distances are bit-identical between backends.  The DBSCAN here
buckets points on a uniform grid whose cell width sits just above eps, which
caps every region query at 27 cells.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt
from libc.stdlib cimport qsort

cnp.import_array()

BACKEND_NAME = "native"

ctypedef cnp.int64_t i64

cdef enum:
    UNDEFINED = -2
    NOISE = -1


cdef int _cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef i64 x = (<const i64*> a)[0]
    cdef i64 y = (<const i64*> b)[0]
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


def _check_points(points):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    return pts


def kth_nn_distances(points, k):
    """Distance from each point to its k-th nearest other point."""
    pts = _check_points(points)
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t kk = k
    if not 1 <= kk < n:
        raise ValueError(f"k must satisfy 1 <= k < n_points, got k={k}, n={n}")
    out = np.empty(n, dtype=np.float64)
    best_arr = np.empty(kk, dtype=np.float64)
    cdef double[:, ::1] p = pts
    cdef double[::1] o = out
    cdef double[::1] best = best_arr
    cdef Py_ssize_t i, j, m, pos
    cdef double dx, dy, dz, d2
    with nogil:
        for i in range(n):
            for m in range(kk):
                best[m] = INFINITY
            for j in range(n):
                if j == i:
                    continue
                dx = p[i, 0] - p[j, 0]
                dy = p[i, 1] - p[j, 1]
                dz = p[i, 2] - p[j, 2]
                d2 = (dx * dx + dy * dy) + dz * dz
                if d2 < best[kk - 1]:
                    pos = kk - 1
                    while pos > 0 and best[pos - 1] > d2:
                        best[pos] = best[pos - 1]
                        pos -= 1
                    best[pos] = d2
            o[i] = sqrt(best[kk - 1])
    return out


cdef inline Py_ssize_t _bsearch(const i64* arr, Py_ssize_t n, i64 key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n - 1, mid
    while lo <= hi:
        mid = (lo + hi) >> 1
        if arr[mid] < key:
            lo = mid + 1
        elif arr[mid] > key:
            hi = mid - 1
        else:
            return mid
    return -1


cdef Py_ssize_t _region_query(
    const double[:, ::1] p,
    Py_ssize_t i,
    double eps,
    const i64[:, ::1] cell,
    i64 ny,
    i64 nz,
    const i64[::1] uniq,
    const i64[::1] starts,
    const i64[::1] order,
    i64* out,
) noexcept nogil:
    """Collect indices within the closed eps-ball of point i, ascending."""
    cdef Py_ssize_t cnt = 0, u, t, j
    cdef i64 cx, cy, cz, key
    cdef int dx, dy, dz
    cdef double qx = p[i, 0], qy = p[i, 1], qz = p[i, 2]
    cdef double ddx, ddy, ddz, d2
    for dx in range(-1, 2):
        # No bounds check on cx: x is the outermost stride of the linear key,
        # so an out-of-range cx yields a key below 0 or above every valid key
        # and the binary search simply misses.  Out-of-range cy/cz keys would
        # alias neighboring rows, hence the explicit checks below.
        cx = cell[i, 0] + dx
        for dy in range(-1, 2):
            cy = cell[i, 1] + dy
            if cy < 0 or cy >= ny:
                continue
            for dz in range(-1, 2):
                cz = cell[i, 2] + dz
                if cz < 0 or cz >= nz:
                    continue
                key = (cx * ny + cy) * nz + cz
                u = _bsearch(&uniq[0], uniq.shape[0], key)
                if u < 0:
                    continue
                for t in range(starts[u], starts[u + 1]):
                    j = order[t]
                    ddx = qx - p[j, 0]
                    ddy = qy - p[j, 1]
                    ddz = qz - p[j, 2]
                    d2 = (ddx * ddx + ddy * ddy) + ddz * ddz
                    if sqrt(d2) <= eps:
                        out[cnt] = j
                        cnt += 1
    qsort(out, cnt, sizeof(i64), _cmp_i64)
    return cnt


def dbscan_labels(points, eps, min_pts):
    """Exact DBSCAN labeling. Returns (labels, n_clusters, core); noise is -1."""
    pts = _check_points(points)
    cdef Py_ssize_t n = pts.shape[0]
    cdef double e = eps
    cdef Py_ssize_t mp = min_pts
    if e <= 0 or not np.isfinite(e):
        raise ValueError(f"eps must be positive and finite, got {eps}")
    if mp < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    labels_arr = np.full(n, UNDEFINED, dtype=np.int64)
    core_arr = np.zeros(n, dtype=np.uint8)
    if n == 0:
        return labels_arr, 0, core_arr.view(np.bool_)

    # Bucket points on a grid. The width sits a hair above eps so that two
    # points within eps can never land more than one cell index apart even
    # after floating-point rounding of the divisions.
    width = e * 1.000001
    cell_f = np.floor(pts / width)
    cell_f -= cell_f.min(axis=0)
    cell_arr = cell_f.astype(np.int64)
    dims = cell_arr.max(axis=0) + 1
    if int(dims[0]) * int(dims[1]) * int(dims[2]) >= 2**62:
        from . import _numpy_impl

        return _numpy_impl.dbscan_labels(pts, eps, min_pts)
    lin = (cell_arr[:, 0] * dims[1] + cell_arr[:, 1]) * dims[2] + cell_arr[:, 2]
    order_arr = np.argsort(lin, kind="stable").astype(np.int64)
    uniq_arr, starts_arr = np.unique(lin[order_arr], return_index=True)
    starts_arr = np.append(starts_arr, n).astype(np.int64)
    uniq_arr = uniq_arr.astype(np.int64)

    buf_arr = np.empty(n, dtype=np.int64)
    queue_arr = np.empty(max(64, 4 * n), dtype=np.int64)

    cdef double[:, ::1] p = pts
    cdef i64[:, ::1] cell = cell_arr
    cdef i64[::1] uniq = uniq_arr
    cdef i64[::1] starts = starts_arr
    cdef i64[::1] order = order_arr
    cdef i64[::1] labels = labels_arr
    cdef cnp.uint8_t[::1] core = core_arr
    cdef i64[::1] buf = buf_arr
    cdef i64[::1] queue = queue_arr
    cdef i64 ny = dims[1], nz = dims[2]
    cdef Py_ssize_t i, t, q, cnt, qhead, qlen, cap
    cdef i64 cid = 0, lq

    for i in range(n):
        if labels[i] != UNDEFINED:
            continue
        cnt = _region_query(p, i, e, cell, ny, nz, uniq, starts, order, &buf[0])
        core[i] = cnt >= mp
        if cnt < mp:
            labels[i] = NOISE
            continue
        labels[i] = cid
        qhead = 0
        qlen = 0
        cap = queue.shape[0]
        for t in range(cnt):
            if buf[t] != i:
                queue[qlen] = buf[t]
                qlen += 1
        while qhead < qlen:
            q = queue[qhead]
            qhead += 1
            lq = labels[q]
            if lq == NOISE:
                labels[q] = cid  # border point claimed by this cluster
                continue
            if lq != UNDEFINED:
                continue
            labels[q] = cid
            cnt = _region_query(p, q, e, cell, ny, nz, uniq, starts, order, &buf[0])
            core[q] = cnt >= mp
            if cnt >= mp:
                if qlen + cnt > cap:
                    while cap < qlen + cnt:
                        cap *= 2
                    new_arr = np.empty(cap, dtype=np.int64)
                    new_arr[:qlen] = queue_arr[:qlen]
                    queue_arr = new_arr
                    queue = queue_arr
                for t in range(cnt):
                    queue[qlen] = buf[t]
                    qlen += 1
        cid += 1
    return labels_arr, int(cid), core_arr.view(np.bool_)
