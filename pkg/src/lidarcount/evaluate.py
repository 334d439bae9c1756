"""Evaluation helpers: confusion metrics, silhouette/elbow summaries,
latency measurement, and the device-temperature sanity check.

The positive class throughout is "person" (label 1).  Ratios with a zero
denominator are reported as 0.0 and flagged via ``degenerate`` rather than
raising, so batch evaluations never fall over on a pathological split.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .clustering import ClusterAssignment, silhouette


@dataclass(frozen=True)
class ConfusionMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool  # some ratio had a zero denominator

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def compute_metrics(y_true, y_pred) -> ConfusionMetrics:
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("y_true and y_pred must be equal-length 1-d arrays")
    if t.size == 0:
        raise ValueError("cannot score an empty prediction set")
    tp = int(((t == 1) & (p == 1)).sum())
    fp = int(((t == 0) & (p == 1)).sum())
    fn = int(((t == 1) & (p == 0)).sum())
    tn = int(((t == 0) & (p == 0)).sum())
    degenerate = False

    def ratio(num: int, den: int) -> float:
        nonlocal degenerate
        if den == 0:
            degenerate = True
            return 0.0
        return num / den

    precision = ratio(tp, tp + fp)
    recall = ratio(tp, tp + fn)
    f1 = ratio(2 * tp, 2 * tp + fp + fn)
    accuracy = (tp + tn) / t.size
    return ConfusionMetrics(tp, fp, fn, tn, accuracy, precision, recall, f1, degenerate)


@dataclass(frozen=True)
class SilhouetteSummary:
    mean: float
    std: float  # population std across the frames that were used
    n_used: int
    n_excluded: int  # frames with fewer than two clusters


def silhouette_summary(
    frames: list[tuple[np.ndarray, ClusterAssignment]]
) -> SilhouetteSummary:
    """Mean per-frame silhouette over frames with at least two clusters.

    ``frames`` holds (points, assignment) pairs as produced by the clustering
    stage; frames where the silhouette is undefined (fewer than two clusters)
    are counted as excluded rather than failing the batch.
    """
    scores = []
    excluded = 0
    for points, assignment in frames:
        if assignment.n_clusters < 2:
            excluded += 1
            continue
        scores.append(silhouette(np.asarray(points, dtype=np.float64), assignment))
    mean = float(np.mean(scores)) if scores else 0.0
    std = float(np.std(scores)) if scores else 0.0
    return SilhouetteSummary(mean, std, len(scores), excluded)


def elbow_histogram(epsilons, bin_width: float = 0.02):
    """Histogram of chosen epsilons in left-inclusive bins [i*w, (i+1)*w).

    Returns (edges, counts) with ``len(edges) == len(counts) + 1``; edges
    start at 0 and cover the largest value.
    """
    eps = np.asarray(epsilons, dtype=np.float64)
    if eps.size == 0:
        raise ValueError("no epsilon values to histogram")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if np.any(eps < 0):
        raise ValueError("epsilon values must be non-negative")
    idx = np.floor(eps / bin_width).astype(np.int64)
    n_bins = int(idx.max()) + 1
    counts = np.bincount(idx, minlength=n_bins)
    edges = np.arange(n_bins + 1, dtype=np.float64) * bin_width
    return edges, counts


@dataclass(frozen=True)
class LatencyReport:
    n: int
    mean_ms: float
    p50_ms: float
    p95_ms: float
    max_ms: float
    budget_ms: float

    @property
    def within_budget(self) -> bool:
        return self.p95_ms < self.budget_ms


def latency_bench(fn, inputs, warmup: int = 30, budget_ms: float = 16.0) -> LatencyReport:
    """Wall-clock latency of ``fn`` over ``inputs`` after a warmup.

    The warmup cycles through the inputs ``warmup`` times-or-fewer calls
    (state caches, JIT-ish numpy paths, allocator) before the measured pass;
    each input is then timed exactly once.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("latency_bench needs at least one input")
    for i in range(warmup):
        fn(inputs[i % len(inputs)])
    times = np.empty(len(inputs))
    for i, x in enumerate(inputs):
        t0 = time.perf_counter()
        fn(x)
        times[i] = (time.perf_counter() - t0) * 1e3
    order = np.sort(times)

    def rank(q: float) -> float:
        # Nearest-rank percentile: smallest value covering q of the sample.
        return float(order[max(0, math.ceil(q * order.size) - 1)])

    return LatencyReport(
        n=order.size,
        mean_ms=float(times.mean()),
        p50_ms=rank(0.50),
        p95_ms=rank(0.95),
        max_ms=float(order[-1]),
        budget_ms=budget_ms,
    )


@dataclass(frozen=True)
class CountingSummary:
    n_scenes: int
    exact: int
    exact_rate: float
    mean_abs_error: float


def counting_summary(true_counts, pred_counts) -> CountingSummary:
    t = np.asarray(true_counts, dtype=np.int64)
    p = np.asarray(pred_counts, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1 or t.size == 0:
        raise ValueError("counts must be equal-length non-empty 1-d arrays")
    exact = int((t == p).sum())
    return CountingSummary(
        n_scenes=t.size,
        exact=exact,
        exact_rate=exact / t.size,
        mean_abs_error=float(np.abs(t - p).mean()),
    )


# --- device temperature log vs. reference weather ---------------------------


def _parse_timestamp(text: str) -> datetime:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError:
        raise ValueError(f"bad timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def read_temperature_csv(path: str) -> tuple[list[tuple[datetime, float]], int]:
    """Read a ``timestamp,temp_c`` CSV (ISO 8601 timestamps, UTC assumed).

    Returns ``(records, n_skipped)``: rows that fail to parse are skipped and
    counted rather than failing the whole file.  A wrong header still raises,
    since that means the file is not a temperature log at all.
    """
    records = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "timestamp,temp_c":
            raise ValueError(f"{path}: expected header 'timestamp,temp_c', got {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                skipped += 1
                continue
            try:
                records.append((_parse_timestamp(parts[0]), float(parts[1])))
            except ValueError:
                skipped += 1
    return records, skipped


def hourly_means(records) -> dict[datetime, float]:
    """Mean reading per UTC hour (timestamps floored to the hour)."""
    sums: dict[datetime, float] = {}
    counts: dict[datetime, int] = {}
    for ts, value in records:
        hour = ts.replace(minute=0, second=0, microsecond=0)
        sums[hour] = sums.get(hour, 0.0) + value
        counts[hour] = counts.get(hour, 0) + 1
    return {h: sums[h] / counts[h] for h in sums}


@dataclass(frozen=True)
class TemperatureReport:
    hours: tuple  # (hour, device_mean, reference, difference) per overlapping hour
    n_hours: int
    mean_bias: float  # mean(device - reference)
    mean_abs_diff: float
    raw_max: float  # over the raw (pre-resample) device readings
    raw_min: float
    raw_mean: float


def temperature_analysis(device_records, weather_records=()) -> TemperatureReport:
    """Hourly resample of the device log, compared against a reference series.

    Raw max/min/mean summarize the device readings before resampling; the
    reference comparison covers only hours both series contain.
    """
    device_records = list(device_records)
    if not device_records:
        raise ValueError("device temperature log is empty")
    values = [v for _, v in device_records]
    device = hourly_means(device_records)
    weather = hourly_means(weather_records)
    common = sorted(set(device) & set(weather))
    rows = tuple(
        (h, device[h], weather[h], device[h] - weather[h]) for h in common
    )
    if rows:
        diffs = np.array([r[3] for r in rows])
        bias = float(diffs.mean())
        abs_diff = float(np.abs(diffs).mean())
    else:
        bias = 0.0
        abs_diff = 0.0
    return TemperatureReport(
        rows,
        len(rows),
        bias,
        abs_diff,
        raw_max=max(values),
        raw_min=min(values),
        raw_mean=math.fsum(values) / len(values),
    )
