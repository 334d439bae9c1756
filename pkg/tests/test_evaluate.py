"""Evaluation utilities: metrics, silhouette batches, histograms, latency, logs."""

import math
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

import lidarcount.evaluate as ev
from lidarcount.evaluate import (
    ClusterAssignment,
    compute_metrics,
    counting_summary,
    elbow_histogram,
    hourly_means,
    latency_bench,
    read_temperature_csv,
    silhouette_summary,
    temperature_analysis,
)
from oracles import hourly_means_oracle, silhouette_direct

UTC = timezone.utc


class TestConfusionMetrics:
    def test_hand_counted_matrix(self):
        y_true = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
        y_pred = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0]
        m = compute_metrics(y_true, y_pred)
        assert (m.tp, m.fp, m.fn, m.tn) == (3, 1, 2, 4)
        assert m.accuracy == 0.7
        assert m.precision == 0.75
        assert m.recall == 0.6
        assert m.f1 == pytest.approx(2 / 3)
        assert m.n == 10
        assert not m.degenerate

    @pytest.mark.parametrize("seed", range(5))
    def test_identities_hold(self, seed):
        rng = np.random.default_rng(seed)
        y_true = rng.integers(0, 2, size=60)
        y_pred = rng.integers(0, 2, size=60)
        m = compute_metrics(y_true, y_pred)
        assert m.accuracy == (m.tp + m.tn) / m.n
        if not m.degenerate:
            assert m.f1 == pytest.approx(
                2 * m.precision * m.recall / (m.precision + m.recall)
            )
        assert m.n == 60

    def test_perfect_prediction(self):
        m = compute_metrics([0, 1, 1, 0], [0, 1, 1, 0])
        assert m.accuracy == 1.0
        assert m.precision == 1.0
        assert m.recall == 1.0
        assert m.f1 == 1.0
        assert not m.degenerate

    def test_zero_denominators_flagged(self):
        m = compute_metrics([0, 0, 0], [0, 0, 0])
        assert m.degenerate
        assert m.precision == 0.0
        assert m.recall == 0.0
        assert m.f1 == 0.0
        assert m.accuracy == 1.0

    def test_input_validation(self):
        with pytest.raises(ValueError, match="equal-length"):
            compute_metrics([1, 0], [1])
        with pytest.raises(ValueError, match="1-d"):
            compute_metrics([[1], [0]], [[1], [0]])
        with pytest.raises(ValueError, match="empty"):
            compute_metrics([], [])


def _two_blob_frame(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal([0, 0, 0], 0.2, size=(12, 3))
    b = rng.normal([6, 0, 0], 0.2, size=(9, 3))
    pts = np.vstack([a, b])
    labels = np.array([0] * 12 + [1] * 9)
    return pts, labels


class TestSilhouetteSummary:
    def test_matches_per_frame_direct_formula(self):
        frames = []
        expected = []
        for seed in (1, 2, 3):
            pts, labels = _two_blob_frame(seed)
            frames.append((pts, ClusterAssignment(labels, 2)))
            expected.append(silhouette_direct(pts, labels))
        s = silhouette_summary(frames)
        assert s.n_used == 3
        assert s.n_excluded == 0
        assert s.mean == pytest.approx(float(np.mean(expected)), abs=1e-12)
        assert s.std == pytest.approx(float(np.std(expected)), abs=1e-12)

    def test_single_cluster_frames_are_excluded(self):
        pts, labels = _two_blob_frame(0)
        lonely = np.zeros((8, 3))
        frames = [
            (pts, ClusterAssignment(labels, 2)),
            (lonely, ClusterAssignment(np.zeros(8, dtype=int), 1)),
            (lonely, ClusterAssignment(np.full(8, -1), 0)),
        ]
        s = silhouette_summary(frames)
        assert s.n_used == 1
        assert s.n_excluded == 2
        assert s.mean == pytest.approx(silhouette_direct(pts, labels))
        assert s.std == 0.0

    def test_all_excluded_gives_zero_summary(self):
        lonely = np.zeros((5, 3))
        frames = [(lonely, ClusterAssignment(np.zeros(5, dtype=int), 1))] * 4
        s = silhouette_summary(frames)
        assert (s.mean, s.std, s.n_used, s.n_excluded) == (0.0, 0.0, 0, 4)

    def test_assignment_validation(self):
        with pytest.raises(ValueError, match="labels must lie in"):
            ClusterAssignment(np.array([0, 3]), 2)
        with pytest.raises(ValueError, match="must be used at least once"):
            ClusterAssignment(np.array([0, 0, 2]), 3)
        with pytest.raises(ValueError, match="core point can never be labeled noise"):
            ClusterAssignment(
                np.array([0, -1]), 1, core=np.array([True, True])
            )
        a = ClusterAssignment(np.array([0, 1]), 2)
        with pytest.raises(ValueError):
            a.labels[0] = 5


class TestElbowHistogram:
    def test_hand_example(self):
        edges, counts = elbow_histogram([0.0, 0.019, 0.02, 0.05], bin_width=0.02)
        assert counts.tolist() == [2, 1, 1]
        np.testing.assert_allclose(edges, [0.0, 0.02, 0.04, 0.06])

    def test_identical_values_land_in_one_bin(self):
        edges, counts = elbow_histogram([0.05] * 7, bin_width=0.02)
        assert counts.tolist() == [0, 0, 7]
        assert len(edges) == len(counts) + 1

    def test_left_inclusive_edges(self):
        # A value exactly on an edge belongs to the bin it opens.
        _, counts = elbow_histogram([0.02], bin_width=0.02)
        assert counts.tolist() == [0, 1]

    def test_validation(self):
        with pytest.raises(ValueError, match="no epsilon values"):
            elbow_histogram([])
        with pytest.raises(ValueError, match="non-negative"):
            elbow_histogram([0.1, -0.2])
        with pytest.raises(ValueError, match="bin_width"):
            elbow_histogram([0.1], bin_width=0.0)


class TestLatencyBench:
    def test_statistics_from_scripted_clock(self, monkeypatch):
        # Ten measured calls taking 1..10 ms on a fake clock.
        durations_s = [i / 1e3 for i in range(1, 11)]
        ticks = []
        t = 0.0
        for d in durations_s:
            ticks.append(t)
            ticks.append(t + d)
            t += d + 0.5
        it = iter(ticks)
        monkeypatch.setattr(ev.time, "perf_counter", lambda: next(it))
        report = latency_bench(lambda x: None, list(range(10)), warmup=3, budget_ms=16.0)
        assert report.n == 10
        assert report.mean_ms == pytest.approx(5.5)
        assert report.p50_ms == pytest.approx(5.0)
        assert report.p95_ms == pytest.approx(10.0)
        assert report.max_ms == pytest.approx(10.0)
        assert report.within_budget  # p95 = 10 < 16

    def test_budget_comparison_is_strict(self):
        r = ev.LatencyReport(n=1, mean_ms=1.0, p50_ms=1.0, p95_ms=16.0, max_ms=1.0, budget_ms=16.0)
        assert not r.within_budget
        r2 = ev.LatencyReport(n=1, mean_ms=1.0, p50_ms=1.0, p95_ms=15.9, max_ms=1.0, budget_ms=16.0)
        assert r2.within_budget

    def test_warmup_runs_before_single_measured_pass(self):
        calls = []
        latency_bench(calls.append, [10, 20, 30], warmup=5)
        assert calls == [10, 20, 30, 10, 20, 10, 20, 30]

    def test_percentiles_are_order_statistics(self):
        fn = lambda x: None
        report = latency_bench(fn, list(range(50)), warmup=2)
        assert report.p50_ms <= report.p95_ms <= report.max_ms
        assert report.n == 50

    def test_needs_inputs(self):
        with pytest.raises(ValueError, match="at least one input"):
            latency_bench(lambda x: None, [])


def _make_log(hours, per_hour, seed, base=20.0):
    """One record every few minutes across `hours` hours, uneven values."""
    rng = np.random.default_rng(seed)
    t0 = datetime(2024, 7, 1, tzinfo=UTC)
    records = []
    for h in range(hours):
        for s in range(per_hour):
            ts = t0 + timedelta(hours=h, minutes=int(rng.integers(0, 60)), seconds=int(rng.integers(0, 60)))
            records.append((ts, base + float(rng.normal(0, 5))))
    return records


class TestHourlyMeans:
    def test_matches_group_by_oracle(self):
        records = _make_log(48, 6, seed=7)
        got = hourly_means(records)
        want = hourly_means_oracle(records)
        assert set(got) == set(want)
        for hour in want:
            assert got[hour] == want[hour]

    def test_order_independent(self):
        # Summation order shifts the result by at most rounding noise.
        records = _make_log(5, 4, seed=3)
        shuffled = list(records)
        np.random.default_rng(0).shuffle(shuffled)
        a = hourly_means(records)
        b = hourly_means(shuffled)
        assert set(a) == set(b)
        for hour in a:
            assert a[hour] == pytest.approx(b[hour], rel=1e-12)

    def test_simple_mean(self):
        t0 = datetime(2024, 1, 1, 12, tzinfo=UTC)
        records = [
            (t0 + timedelta(minutes=5), 10.0),
            (t0 + timedelta(minutes=25), 20.0),
            (t0 + timedelta(minutes=45), 30.0),
        ]
        assert hourly_means(records) == {t0: 20.0}

    def test_conservation_of_totals(self):
        records = _make_log(48, 6, seed=11)
        means = hourly_means(records)
        counts = {}
        for ts, _ in records:
            hour = ts.replace(minute=0, second=0, microsecond=0)
            counts[hour] = counts.get(hour, 0) + 1
        resampled_total = sum(means[h] * counts[h] for h in means)
        raw_total = math.fsum(v for _, v in records)
        assert resampled_total == pytest.approx(raw_total, abs=1e-9)


class TestTemperatureAnalysis:
    def test_constant_log_against_reference(self):
        device = _make_log(48, 6, seed=1, base=40.0)
        device = [(ts, 40.0) for ts, _ in device]
        weather = [
            (datetime(2024, 7, 1, tzinfo=UTC) + timedelta(hours=h), 39.0)
            for h in range(48)
        ]
        report = temperature_analysis(device, weather)
        assert report.n_hours == 48
        assert report.mean_bias == pytest.approx(1.0)
        assert report.mean_abs_diff == pytest.approx(1.0)
        assert report.raw_max == 40.0
        assert report.raw_min == 40.0
        assert report.raw_mean == 40.0
        for hour, dev_mean, ref, diff in report.hours:
            assert dev_mean == 40.0
            assert ref == 39.0
            assert diff == pytest.approx(1.0)

    def test_comparison_covers_only_common_hours(self):
        t0 = datetime(2024, 7, 1, tzinfo=UTC)
        device = [(t0 + timedelta(hours=h, minutes=10), 20.0 + h) for h in range(4)]
        weather = [(t0 + timedelta(hours=h), 15.0) for h in (2, 3, 4, 5)]
        report = temperature_analysis(device, weather)
        assert report.n_hours == 2
        assert [row[0] for row in report.hours] == [
            t0 + timedelta(hours=2),
            t0 + timedelta(hours=3),
        ]
        assert report.mean_bias == pytest.approx(np.mean([22.0 - 15.0, 23.0 - 15.0]))

    def test_raw_stats_are_over_unresampled_readings(self):
        t0 = datetime(2024, 7, 1, tzinfo=UTC)
        device = [
            (t0 + timedelta(minutes=1), 10.0),
            (t0 + timedelta(minutes=2), 20.0),
            (t0 + timedelta(minutes=3), 30.0),
            (t0 + timedelta(hours=1), -5.0),
        ]
        report = temperature_analysis(device)
        assert report.raw_max == 30.0
        assert report.raw_min == -5.0
        assert report.raw_mean == pytest.approx(55.0 / 4)

    def test_no_reference_series(self):
        device = _make_log(3, 2, seed=5)
        report = temperature_analysis(device)
        assert report.hours == ()
        assert report.n_hours == 0
        assert report.mean_bias == 0.0
        assert report.mean_abs_diff == 0.0

    def test_empty_log_raises(self):
        with pytest.raises(ValueError, match="device temperature log is empty"):
            temperature_analysis([])


class TestReadTemperatureCsv:
    def test_round_trip_with_skips(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text(
            "timestamp,temp_c\n"
            "2024-07-01T00:05:00Z,21.5\n"
            "2024-07-01T00:35:00+00:00,22.5\n"
            "not-a-timestamp,1.0\n"
            "2024-07-01T01:05:00Z,oops\n"
            "2024-07-01T01:05:00Z\n"
            "\n"
            "2024-07-01T01:10:00,23.0\n"
        )
        records, skipped = read_temperature_csv(str(path))
        assert skipped == 3
        assert len(records) == 3
        assert records[0] == (datetime(2024, 7, 1, 0, 5, tzinfo=UTC), 21.5)
        assert records[1] == (datetime(2024, 7, 1, 0, 35, tzinfo=UTC), 22.5)
        # Naive timestamps are taken as UTC.
        assert records[2] == (datetime(2024, 7, 1, 1, 10, tzinfo=UTC), 23.0)

    def test_non_utc_offsets_are_normalized(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("timestamp,temp_c\n2024-07-01T02:00:00+02:00,5.0\n")
        records, skipped = read_temperature_csv(str(path))
        assert skipped == 0
        assert records == [(datetime(2024, 7, 1, 0, 0, tzinfo=UTC), 5.0)]

    def test_wrong_header_raises(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("time,celsius\n2024-07-01T00:00:00Z,1.0\n")
        with pytest.raises(ValueError, match="expected header 'timestamp,temp_c'"):
            read_temperature_csv(str(path))


class TestCountingSummary:
    def test_hand_example(self):
        s = counting_summary([0, 1, 2, 3], [0, 1, 1, 3])
        assert s.n_scenes == 4
        assert s.exact == 3
        assert s.exact_rate == 0.75
        assert s.mean_abs_error == 0.25

    def test_validation(self):
        with pytest.raises(ValueError):
            counting_summary([], [])
        with pytest.raises(ValueError):
            counting_summary([1, 2], [1])
