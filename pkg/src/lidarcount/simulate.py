"""Synthetic pole-mounted LiDAR: analytic ray casting over simple solids.

The sensor sits at the origin on top of a 3 m pole (ground plane z = -3),
sweeping a 90-degree azimuth sector with 128 steps and 32 elevation channels
spread over -45..+45 degrees.  Ranges get Gaussian noise (sigma 1 cm) and are
quantized to the 3 mm resolution of the real device; returns outside
[0.3 m, 35 m] are dropped.

A person is a torso ellipsoid + head sphere + two leg cylinders; clutter is
a box, a pole, or a bush (sphere on the ground).  Cylinders are open (no end
caps) which is fine at these radii.  Every random draw comes from seeds
derived with numpy's SeedSequence, so scenes are reproducible point for
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import DEFAULT_ROI, Frame, RoiConfig

CLASSES = ("human", "box", "pole", "bush")

#: Placement window for background scenes (anywhere inside the default ROI).
PLACE_X = (2.5, 11.0)
PLACE_Y = (-2.0, 2.0)

#: Labeled datasets and counting scenes keep objects close enough that every
#: one spans several elevation rings; beyond ~6 m a person covers too few to
#: classify or count reliably.
COUNT_PLACE_X = (2.5, 5.5)

#: Minimum accepted returns per generated object.
MIN_OBJECT_RETURNS = 18

#: Density threshold the counting pipeline runs with.  The scan pattern is
#: strongly anisotropic (elevation rings sit ~4x further apart than azimuth
#: steps), so the neighbor count must be high enough that the k-th-neighbor
#: distance crosses ring gaps; 5 splits wide objects into per-ring strips.
COUNT_MIN_PTS = 12


@dataclass(frozen=True)
class SensorModel:
    n_channels: int = 32
    vfov_deg: tuple[float, float] = (-45.0, 45.0)
    azimuth_fov_deg: float = 90.0
    azimuth_steps: int = 128
    min_range: float = 0.3
    max_range: float = 35.0
    noise_sigma: float = 0.01
    range_quantum: float = 0.003
    ground_z: float = -3.0

    def directions(self) -> np.ndarray:
        """Unit ray directions, azimuth-major then channel, shape (rays, 3)."""
        elev = np.radians(np.linspace(self.vfov_deg[0], self.vfov_deg[1], self.n_channels))
        step = self.azimuth_fov_deg / self.azimuth_steps
        azim = np.radians(-self.azimuth_fov_deg / 2.0 + step * np.arange(self.azimuth_steps))
        az, el = np.meshgrid(azim, elev, indexing="ij")
        ce = np.cos(el)
        return np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=-1).reshape(-1, 3)


DEFAULT_SENSOR = SensorModel()


@dataclass(frozen=True)
class ObjectSpec:
    """One scene object. Meaning of the size fields depends on ``kind``:

    human: ``height`` (total); box: ``length`` x ``width`` footprint,
    ``height`` tall; pole: ``radius``, ``height``; bush: ``radius``.
    """

    kind: str
    x: float
    y: float
    heading: float = 0.0
    height: float = 1.7
    radius: float = 0.0
    length: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in CLASSES:
            raise ValueError(f"unknown object kind {self.kind!r}")


@dataclass(frozen=True)
class SceneTruth:
    """Per-point object index (-1 = ground) and per-object class names."""

    object_ids: np.ndarray
    classes: tuple[str, ...]

    def __post_init__(self):
        ids = np.asarray(self.object_ids, dtype=np.int64).copy()
        ids.setflags(write=False)
        object.__setattr__(self, "object_ids", ids)


# Human body proportions (meters / fractions of height).  The torso covers
# the trunk and hips so that a person spans several elevation rings even a
# few meters out; with 32 channels over 90 degrees the rings are coarse.
TORSO_SEMI_AXES = (0.24, 0.17, 0.45)
TORSO_CENTER_FRAC = 0.55
HEAD_RADIUS = 0.11
LEG_RADIUS = 0.07
LEG_TOP_FRAC = 0.5
LEG_OFFSET = 0.09


def _primitives(obj: ObjectSpec, gz: float) -> list[tuple]:
    x, y, th = obj.x, obj.y, obj.heading
    if obj.kind == "human":
        h = obj.height
        ox, oy = -math.sin(th) * LEG_OFFSET, math.cos(th) * LEG_OFFSET
        return [
            ("ellipsoid", (x, y, gz + TORSO_CENTER_FRAC * h), TORSO_SEMI_AXES, th),
            ("sphere", (x, y, gz + h - HEAD_RADIUS), HEAD_RADIUS),
            ("cylinder", x + ox, y + oy, LEG_RADIUS, gz, gz + LEG_TOP_FRAC * h),
            ("cylinder", x - ox, y - oy, LEG_RADIUS, gz, gz + LEG_TOP_FRAC * h),
        ]
    if obj.kind == "box":
        return [("box", x, y, th, obj.length / 2, obj.width / 2, gz, gz + obj.height)]
    if obj.kind == "pole":
        return [("cylinder", x, y, obj.radius, gz, gz + obj.height)]
    return [("sphere", (x, y, gz + obj.radius), obj.radius)]  # bush


def _rot_xy(dirs: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    out = dirs.copy()
    out[..., 0] = c * dirs[..., 0] + s * dirs[..., 1]
    out[..., 1] = -s * dirs[..., 0] + c * dirs[..., 1]
    return out


def _t_ground(dirs: np.ndarray, gz: float) -> np.ndarray:
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = gz / dz
    return np.where((dz < 0) & (t > 0), t, np.inf)


def _t_sphere(dirs: np.ndarray, center, r: float) -> np.ndarray:
    c = np.asarray(center, dtype=np.float64)
    b = dirs @ c
    disc = b * b - (c @ c - r * r)
    with np.errstate(invalid="ignore"):
        t = b - np.sqrt(disc)
    return np.where((disc >= 0) & (t > 1e-9), t, np.inf)


def _t_ellipsoid(dirs: np.ndarray, center, semi, theta: float) -> np.ndarray:
    c = np.asarray(center, dtype=np.float64)
    s = np.asarray(semi, dtype=np.float64)
    d = _rot_xy(dirs, theta) / s
    o = _rot_xy(-c[None, :], theta)[0] / s
    a = (d * d).sum(axis=1)
    b = 2.0 * (d @ o)
    c0 = o @ o - 1.0
    disc = b * b - 4.0 * a * c0
    with np.errstate(invalid="ignore"):
        t = (-b - np.sqrt(disc)) / (2.0 * a)
    return np.where((disc >= 0) & (t > 1e-9), t, np.inf)


def _t_cylinder(dirs: np.ndarray, cx, cy, r, z0, z1) -> np.ndarray:
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    a = dx * dx + dy * dy
    b = -2.0 * (dx * cx + dy * cy)
    c0 = cx * cx + cy * cy - r * r
    disc = b * b - 4.0 * a * c0
    ok = (disc >= 0) & (a > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        sq = np.sqrt(disc)
        t1 = (-b - sq) / (2.0 * a)
        t2 = (-b + sq) / (2.0 * a)
    z_at = lambda t: t * dz  # noqa: E731
    good1 = ok & (t1 > 1e-9) & (z_at(t1) >= z0) & (z_at(t1) <= z1)
    good2 = ok & (t2 > 1e-9) & (z_at(t2) >= z0) & (z_at(t2) <= z1)
    t = np.where(good1, t1, np.where(good2, t2, np.inf))
    return t


def _t_box(dirs: np.ndarray, cx, cy, theta, hx, hy, z0, z1) -> np.ndarray:
    d = _rot_xy(dirs, theta)
    o = _rot_xy(-np.array([[cx, cy, 0.0]]), theta)[0]
    lo = np.array([-hx, -hy, z0])
    hi = np.array([hx, hy, z1])
    o3 = np.array([o[0], o[1], 0.0])
    tmin = np.full(dirs.shape[0], 1e-9)
    tmax = np.full(dirs.shape[0], np.inf)
    for ax in range(3):
        da = d[:, ax]
        oa = o3[ax]
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = (lo[ax] - oa) / da
            tf = (hi[ax] - oa) / da
        near = np.minimum(tn, tf)
        far = np.maximum(tn, tf)
        parallel = np.abs(da) < 1e-12
        inside = (oa >= lo[ax]) & (oa <= hi[ax])
        near = np.where(parallel, np.where(inside, -np.inf, np.inf), near)
        far = np.where(parallel, np.where(inside, np.inf, -np.inf), far)
        tmin = np.maximum(tmin, near)
        tmax = np.minimum(tmax, far)
    return np.where(tmax >= tmin, tmin, np.inf)


def _primitive_t(prim: tuple, dirs: np.ndarray) -> np.ndarray:
    kind = prim[0]
    if kind == "sphere":
        return _t_sphere(dirs, prim[1], prim[2])
    if kind == "ellipsoid":
        return _t_ellipsoid(dirs, prim[1], prim[2], prim[3])
    if kind == "cylinder":
        return _t_cylinder(dirs, *prim[1:])
    if kind == "box":
        return _t_box(dirs, *prim[1:])
    raise AssertionError(kind)


def raycast(
    sensor: SensorModel,
    objects: list[ObjectSpec],
    seed: int,
    frame_id: int = 0,
    timestamp: float = 0.0,
) -> tuple[Frame, SceneTruth]:
    """Cast all rays, return the frame and per-point object ids."""
    dirs = sensor.directions()
    n_rays = dirs.shape[0]
    best_t = _t_ground(dirs, sensor.ground_z)
    best_id = np.where(np.isfinite(best_t), -1, -2)  # -2: no hit at all
    for oid, obj in enumerate(objects):
        for prim in _primitives(obj, sensor.ground_z):
            t = _primitive_t(prim, dirs)
            closer = t < best_t
            best_t = np.where(closer, t, best_t)
            best_id = np.where(closer, oid, best_id)
    hit = best_id > -2
    rng = np.random.default_rng(seed)
    t_hit = best_t[hit] + rng.normal(0.0, sensor.noise_sigma, size=int(hit.sum()))
    t_hit = np.round(t_hit / sensor.range_quantum) * sensor.range_quantum
    keep = (t_hit >= sensor.min_range) & (t_hit <= sensor.max_range)
    points = dirs[hit][keep] * t_hit[keep, None]
    ids = best_id[hit][keep]
    frame = Frame(frame_id, timestamp, points)
    return frame, SceneTruth(ids, tuple(o.kind for o in objects))


def preprocess_with_ids(
    frame: Frame, truth: SceneTruth, roi: RoiConfig = DEFAULT_ROI
) -> tuple[np.ndarray, np.ndarray]:
    """Ground/ROI filtering that keeps the per-point ids aligned."""
    p = frame.points
    keep = (
        (p[:, 2] >= roi.z_min)
        & (p[:, 0] >= roi.x_min)
        & (p[:, 0] <= roi.x_max)
        & (p[:, 1] >= roi.y_min)
        & (p[:, 1] <= roi.y_max)
    )
    return p[keep], truth.object_ids[keep]


def derive_seed(master: int, *path: int) -> int:
    """Stable per-scene seed from a master seed and an index path."""
    return int(np.random.SeedSequence([master, *path]).generate_state(1, np.uint64)[0])


def _random_human(rng: np.random.Generator, x: float, y: float) -> ObjectSpec:
    return ObjectSpec(
        "human",
        x,
        y,
        heading=float(rng.uniform(0, 2 * math.pi)),
        height=float(rng.uniform(1.5, 1.9)),
    )


def _random_clutter(rng: np.random.Generator, x: float, y: float) -> ObjectSpec:
    # Sizes keep a good part of each object above the z >= -2.6 cut (ground
    # sits at -3); anything shorter is invisible to the pipeline by design.
    kind = ("box", "pole", "bush")[int(rng.integers(0, 3))]
    if kind == "box":
        return ObjectSpec(
            "box",
            x,
            y,
            heading=float(rng.uniform(0, 2 * math.pi)),
            length=float(rng.uniform(0.5, 1.2)),
            width=float(rng.uniform(0.4, 1.0)),
            height=float(rng.uniform(0.8, 1.6)),
        )
    if kind == "pole":
        return ObjectSpec(
            "pole",
            x,
            y,
            radius=float(rng.uniform(0.08, 0.18)),
            height=float(rng.uniform(1.8, 3.0)),
        )
    return ObjectSpec("bush", x, y, radius=float(rng.uniform(0.45, 0.65)))


def _place(rng: np.random.Generator) -> tuple[float, float]:
    return float(rng.uniform(*PLACE_X)), float(rng.uniform(*PLACE_Y))


def _single_object_cluster(
    make, master: int, index: int, sensor: SensorModel, min_pts: int
) -> np.ndarray:
    """One scene with one object, reduced to its clustered returns.

    The cluster is extracted the same way the counting pipeline extracts it
    (adaptive-epsilon DBSCAN), so classifiers train on the exact shapes they
    will see at inference: border points dropped, stragglers marked noise.
    """
    from .clustering import DbscanParams, choose_epsilon, dbscan

    for attempt in range(50):
        rng = np.random.default_rng(np.random.SeedSequence([master, index, attempt]))
        x = float(rng.uniform(*COUNT_PLACE_X))
        y = float(rng.uniform(*PLACE_Y))
        obj = make(rng, x, y)
        frame, truth = raycast(
            sensor, [obj], derive_seed(master, index, attempt, 1), frame_id=index
        )
        pts, ids = preprocess_with_ids(frame, truth)
        if int((ids == 0).sum()) < MIN_OBJECT_RETURNS or pts.shape[0] < min_pts:
            continue
        elbow = choose_epsilon(pts, min_pts=min_pts)
        if not elbow.epsilon > 0:
            continue
        assignment = dbscan(pts, DbscanParams(elbow.epsilon, min_pts))
        best_n = 0
        best = None
        for c in range(assignment.n_clusters):
            sel = assignment.labels == c
            n_obj = int((sel & (ids == 0)).sum())
            if n_obj > best_n:
                best_n, best = n_obj, sel
        if best is None:
            continue
        cluster = pts[best]
        if best_n >= MIN_OBJECT_RETURNS and best_n >= 0.7 * cluster.shape[0]:
            return cluster
    raise RuntimeError(f"could not generate a visible object for index {index}")


def gen_labeled_dataset(
    n_human: int,
    n_clutter: int,
    seed: int,
    sensor: SensorModel = DEFAULT_SENSOR,
    min_pts: int = COUNT_MIN_PTS,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Single-object scenes reduced to the object's clustered returns.

    Returns (clusters, labels) with labels 1 for person, 0 for clutter;
    person clusters come first.  Deterministic in ``seed``.  ``min_pts``
    should match the value the counting pipeline will run with.
    """
    clusters: list[np.ndarray] = []
    labels: list[int] = []
    for i in range(n_human):
        clusters.append(_single_object_cluster(_random_human, seed, i, sensor, min_pts))
        labels.append(1)
    for i in range(n_clutter):
        clusters.append(
            _single_object_cluster(_random_clutter, seed, n_human + i, sensor, min_pts)
        )
        labels.append(0)
    return clusters, np.array(labels, dtype=np.int64)


def gen_ground_pool(
    n_scenes: int, seed: int, sensor: SensorModel = DEFAULT_SENSOR
) -> np.ndarray:
    """Padding pool: floor returns that the height cut removes.

    These all sit in a thin band just above the ground plane, strictly below
    the region-of-interest floor, so in a z-sorted projection they pack into
    a contiguous block that never interleaves with object points.
    """
    z_cut = DEFAULT_ROI.z_min
    rows = []
    for i in range(n_scenes):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        objects = []
        for j in range(int(rng.integers(1, 4))):
            x, y = _place(rng)
            objects.append(_random_clutter(rng, x, y))
        frame, truth = raycast(sensor, objects, derive_seed(seed, i, 1), frame_id=i)
        pts = frame.points
        band = pts[pts[:, 2] < z_cut]
        if band.shape[0]:
            rows.append(band)
    if not rows:
        return np.empty((0, 3))
    return np.concatenate(rows, axis=0)


def _well_separated(placements, x, y, min_dist=1.5, min_azim_deg=6.0) -> bool:
    for px, py in placements:
        if math.hypot(px - x, py - y) < min_dist:
            return False
        if abs(math.atan2(py, px) - math.atan2(y, x)) < math.radians(min_azim_deg):
            return False
    return True


def _clusters_match_objects(pts, ids, n_objects: int, min_pts: int) -> bool:
    """True when adaptive-epsilon clustering recovers the objects 1:1.

    Each object must land (mostly) in exactly one cluster, every cluster must
    come from exactly one object, and the cluster count must equal the object
    count.  Used to reject scenes whose geometry defeats clustering (e.g. a
    far object sampled on too few scan rings), so that counting benchmarks
    measure classification rather than pathological sampling.
    """
    from .clustering import DbscanParams, choose_epsilon, dbscan

    if n_objects == 0:
        return pts.shape[0] < max(3, min_pts)
    if pts.shape[0] < max(3, min_pts):
        return False
    elbow = choose_epsilon(pts, min_pts)
    if elbow.epsilon <= 0.0:
        return False
    assignment = dbscan(pts, DbscanParams(float(elbow.epsilon), min_pts))
    if assignment.n_clusters != n_objects:
        return False
    labels = assignment.labels
    for c in range(assignment.n_clusters):
        sources = np.unique(ids[labels == c])
        if sources.size != 1 or sources[0] < 0:
            return False
    for oid in range(n_objects):
        mine = labels[ids == oid]
        clustered = mine[mine >= 0]
        if clustered.size == 0 or np.unique(clustered).size != 1:
            return False
        if clustered.size < 0.7 * mine.size:
            return False
    return True


def make_count_scene(
    n_humans: int,
    n_clutter: int,
    seed: int,
    sensor: SensorModel = DEFAULT_SENSOR,
    frame_id: int = 0,
    min_pts: int = COUNT_MIN_PTS,
) -> tuple[Frame, SceneTruth, int]:
    """A multi-object scene where every object is separated and countable.

    Objects sit in the COUNT_PLACE_X window, keep >= 1.5 m center distance
    and >= 6 degrees of azimuth apart (no mutual occlusion), each yields at
    least 18 preprocessed returns, and the scene passes
    :func:`_clusters_match_objects` under ``min_pts`` — run the counting
    pipeline with the same ``min_pts`` to inherit that guarantee.  Returns
    (frame, truth, n_humans).
    """
    min_returns = max(MIN_OBJECT_RETURNS, (3 * min_pts) // 2)
    for attempt in range(500):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        placements: list[tuple[float, float]] = []
        objects: list[ObjectSpec] = []
        ok = True
        for k in range(n_humans + n_clutter):
            placed = False
            for _ in range(100):
                x = float(rng.uniform(*COUNT_PLACE_X))
                y = float(rng.uniform(*PLACE_Y))
                if _well_separated(placements, x, y):
                    placements.append((x, y))
                    make = _random_human if k < n_humans else _random_clutter
                    objects.append(make(rng, x, y))
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if not ok:
            continue
        frame, truth = raycast(
            sensor, objects, derive_seed(seed, attempt, 1), frame_id=frame_id,
            timestamp=float(frame_id),
        )
        pts, ids = preprocess_with_ids(frame, truth)
        visible = all(
            int((ids == oid).sum()) >= min_returns for oid in range(len(objects))
        )
        if visible and _clusters_match_objects(pts, ids, len(objects), min_pts):
            return frame, truth, n_humans
    raise RuntimeError(f"could not build a valid scene for seed {seed}")
