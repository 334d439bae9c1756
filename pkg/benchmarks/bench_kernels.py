"""Compare the compiled clustering kernels against the numpy fallback.

Generates blob-plus-noise point clouds of increasing size, times
kth_nn_distances and dbscan_labels on both backends, checks they agree
bit for bit, and prints a table with speedups.

    python benchmarks/bench_kernels.py [--sizes 200 500 1000 2000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from lidarcount._kernels import _numpy_impl

try:
    from lidarcount._kernels import _native
except ImportError:
    _native = None


def make_cloud(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    blobs = []
    n_blobs = max(1, n // 120)
    for _ in range(n_blobs):
        center = rng.uniform([1, -2, -2.5], [11, 2, -0.5])
        blobs.append(center + rng.normal(0, 0.08, size=(100, 3)))
    noise = rng.uniform([0.3, -2.5, -2.6], [12, 2.5, 1.0], size=(max(0, n - 100 * n_blobs), 3))
    cloud = np.concatenate(blobs + [noise])[:n]
    return np.ascontiguousarray(cloud)


def best_of(repeat, fn, *args):
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 500, 1000, 2000, 4000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--min-pts", type=int, default=5)
    args = ap.parse_args()

    if _native is None:
        print("compiled backend not available; showing numpy timings only")
    header = f"{'n':>6} {'kernel':<12} {'numpy ms':>10} {'native ms':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in args.sizes:
        pts = make_cloud(n, seed=n)
        t_np, d_np = best_of(args.repeat, _numpy_impl.kth_nn_distances, pts, args.k)
        eps = float(np.median(d_np))
        rows = [("kth_nn", t_np, None)]
        t_np2, lab_np = best_of(
            args.repeat, _numpy_impl.dbscan_labels, pts, eps, args.min_pts
        )
        rows.append(("dbscan", t_np2, None))
        if _native is not None:
            t_nat, d_nat = best_of(args.repeat, _native.kth_nn_distances, pts, args.k)
            assert np.array_equal(d_np, d_nat), "kth_nn backends disagree"
            rows[0] = ("kth_nn", t_np, t_nat)
            t_nat2, lab_nat = best_of(
                args.repeat, _native.dbscan_labels, pts, eps, args.min_pts
            )
            assert np.array_equal(lab_np[0], lab_nat[0]), "dbscan backends disagree"
            assert np.array_equal(lab_np[2], lab_nat[2]), "core masks disagree"
            rows[1] = ("dbscan", t_np2, t_nat2)
        for name, t_numpy, t_native in rows:
            if t_native is None:
                print(f"{n:>6} {name:<12} {t_numpy * 1e3:>10.3f} {'-':>10} {'-':>8}")
            else:
                print(
                    f"{n:>6} {name:<12} {t_numpy * 1e3:>10.3f} "
                    f"{t_native * 1e3:>10.3f} {t_numpy / t_native:>8.2f}"
                )
    if _native is not None:
        print("\nbackends agreed bit for bit on every input above")


if __name__ == "__main__":
    main()
