"""Point-cloud frames, their file formats, and preprocessing filters.

A frame is one sensor capture: an id, a timestamp (unix seconds), and an
ordered set of XYZ returns in meters, stored as an (n, 3) float64 array.
Two interchange formats are supported:

* ``csv``: header ``frame_id,timestamp,x,y,z``, one point per row, rows of
  one frame contiguous.  A frame with zero points cannot be represented.
* ``ndjson``: one ``{"frame_id": .., "timestamp": .., "points": [[x,y,z],..]}``
  object per line.

Both formats write floats with ``repr`` so a write/parse round trip is
bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

FORMATS = ("csv", "ndjson")
CSV_HEADER = "frame_id,timestamp,x,y,z"

#: Ground cut: returns below this height (meters, sensor at z=0) are dropped.
DEFAULT_Z_MIN = -2.6


class FrameFormatError(ValueError):
    """A frame payload that cannot be parsed (bad header, row, or JSON)."""


def as_points(points) -> np.ndarray:
    """Coerce to a finite (n, 3) float64 array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        pts = pts.reshape(0, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("points contain non-finite coordinates")
    return pts


@dataclass(frozen=True)
class Frame:
    """One capture. ``points`` is defensively copied and made read-only."""

    frame_id: int
    timestamp: float
    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not np.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.frame_id == other.frame_id
            and self.timestamp == other.timestamp
            and self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
        )

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class RoiConfig:
    """Axis-aligned region of interest; all boundaries inclusive."""

    x_min: float = 0.3
    x_max: float = 12.0
    y_min: float = -2.5
    y_max: float = 2.5
    z_min: float = DEFAULT_Z_MIN

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("ROI bounds must satisfy min < max")
        for v in (self.x_min, self.x_max, self.y_min, self.y_max, self.z_min):
            if not np.isfinite(v):
                raise ValueError("ROI bounds must be finite")


DEFAULT_ROI = RoiConfig()


def remove_ground(frame: Frame, z_min: float = DEFAULT_Z_MIN) -> Frame:
    """Drop returns with z < z_min; keeps order, id and timestamp."""
    keep = frame.points[:, 2] >= z_min
    return Frame(frame.frame_id, frame.timestamp, frame.points[keep])


def apply_roi(frame: Frame, roi: RoiConfig = DEFAULT_ROI) -> Frame:
    """Keep points inside the box (inclusive on every face)."""
    p = frame.points
    keep = (
        (p[:, 0] >= roi.x_min)
        & (p[:, 0] <= roi.x_max)
        & (p[:, 1] >= roi.y_min)
        & (p[:, 1] <= roi.y_max)
        & (p[:, 2] >= roi.z_min)
    )
    return Frame(frame.frame_id, frame.timestamp, p[keep])


def _as_text(source) -> str:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8")
    return source


def parse_frames(source, fmt: str) -> list[Frame]:
    """Parse a byte/str payload (or open file) into frames.

    Raises FrameFormatError naming the offending line, ValueError for an
    unknown ``fmt``.
    """
    text = _as_text(source)
    if text.strip() == "":
        if fmt not in FORMATS:
            raise ValueError(f"unknown frame format {fmt!r}, expected one of {FORMATS}")
        return []
    return list(stream_frames(text.splitlines(), fmt))


def stream_frames(lines, fmt: str):
    """Yield frames lazily from an iterable of text lines (e.g. an open file).

    Holds at most one frame in memory at a time; validation and error
    messages match :func:`parse_frames`.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown frame format {fmt!r}, expected one of {FORMATS}")
    if fmt == "csv":
        return _stream_csv(iter(lines))
    return _stream_ndjson(iter(lines))


def _stream_csv(lines):
    header = next(lines, None)
    if header is None:
        return
    if header.strip() != CSV_HEADER:
        raise FrameFormatError(
            f"line 1: expected header {CSV_HEADER!r}, got {header.rstrip()!r}"
        )
    seen: set[int] = set()
    cur_id = None
    cur_ts = 0.0
    cur_pts: list[list[float]] = []
    for lineno, line in enumerate(lines, start=2):
        if line.strip() == "":
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise FrameFormatError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            fid = int(parts[0])
            ts = float(parts[1])
            xyz = [float(parts[2]), float(parts[3]), float(parts[4])]
        except ValueError as exc:
            raise FrameFormatError(f"line {lineno}: {exc}") from exc
        if fid != cur_id:
            if fid in seen:
                raise FrameFormatError(
                    f"line {lineno}: frame_id {fid} reappears non-contiguously"
                )
            if cur_id is not None:
                yield Frame(cur_id, cur_ts, np.array(cur_pts, dtype=np.float64))
            seen.add(fid)
            cur_id, cur_ts, cur_pts = fid, ts, []
        cur_pts.append(xyz)
    if cur_id is not None:
        yield Frame(cur_id, cur_ts, np.array(cur_pts, dtype=np.float64))


def _stream_ndjson(lines):
    seen: set[int] = set()
    for lineno, line in enumerate(lines, start=1):
        if line.strip() == "":
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FrameFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or not {"frame_id", "timestamp", "points"} <= set(obj):
            raise FrameFormatError(
                f"line {lineno}: expected keys frame_id, timestamp, points"
            )
        try:
            frame = Frame(int(obj["frame_id"]), float(obj["timestamp"]), obj["points"])
        except (TypeError, ValueError) as exc:
            raise FrameFormatError(f"line {lineno}: {exc}") from exc
        if frame.frame_id in seen:
            raise FrameFormatError(
                f"line {lineno}: duplicate frame_id {frame.frame_id}"
            )
        seen.add(frame.frame_id)
        yield frame


def write_frames(frames, fmt: str) -> bytes:
    """Serialize frames; ``parse_frames(write_frames(f), fmt) == f``."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown frame format {fmt!r}, expected one of {FORMATS}")
    if fmt == "csv":
        out = [CSV_HEADER]
        for f in frames:
            if len(f) == 0:
                raise ValueError(
                    f"frame {f.frame_id} has no points; csv cannot represent it"
                )
            ts = repr(float(f.timestamp))
            for x, y, z in f.points:
                out.append(f"{f.frame_id},{ts},{float(x)!r},{float(y)!r},{float(z)!r}")
        return ("\n".join(out) + "\n").encode("utf-8")
    out = []
    for f in frames:
        rec = {
            "frame_id": f.frame_id,
            "timestamp": f.timestamp,
            "points": [[float(x), float(y), float(z)] for x, y, z in f.points],
        }
        out.append(json.dumps(rec, separators=(",", ":")))
    return ("\n".join(out) + ("\n" if out else "")).encode("utf-8")
