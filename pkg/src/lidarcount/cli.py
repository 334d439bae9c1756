"""Command line front end.

    lidarcount simulate scenes   --scenes 20 --max-humans 3 --out frames.csv --truth truth.csv
    lidarcount simulate clusters --humans 200 --clutter 200 --features train.csv
    lidarcount simulate pool     --scenes 10 --out pool.csv
    lidarcount preprocess        --input raw.csv --output clean.csv
    lidarcount cluster           --input clean.csv --output labels.ndjson
    lidarcount featurize         --input clean.csv --output features.csv
    lidarcount train ae          --features train.csv --val-features val.csv --output ae.json
    lidarcount train cnn         --images train.ndjson --val-images val.ndjson --output cnn.json
    lidarcount evaluate features --model ae.json --features val.csv
    lidarcount evaluate images   --model cnn.json --images val.ndjson
    lidarcount evaluate count    --model cnn.json --frames f.csv --truth t.csv --pool pool.csv
    lidarcount quantize          --model cnn.json --calib val.ndjson --output cnn.q.json
    lidarcount bench             --model ae.json --frames f.csv
    lidarcount count             --model ae.json --input stream.ndjson --output -
    lidarcount temps             --device device.csv --weather weather.csv

Exit codes: 0 success, 1 usage error, 2 data or processing error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .clustering import DbscanParams, choose_epsilon, dbscan, extract_clusters
from .config import DEFAULT_CONFIG, PipelineConfig, load_config
from .evaluate import (
    compute_metrics,
    counting_summary,
    latency_bench,
    read_temperature_csv,
    temperature_analysis,
)
from .features import (
    FeatureStats,
    SliceSpec,
    apply_normalizer,
    extract_features,
    fit_normalizer,
    read_feature_csv,
    write_feature_csv,
)
from .frames import (
    FrameFormatError,
    apply_roi,
    parse_frames,
    stream_frames,
    write_frames,
)
from .modelio import ModelFormatError, load_model, save_model
from .nn.archs import build_autoencoder, build_cnn2d, choose_threshold, classify_ae, classify_cnn
from .nn.train import TrainConfig, TrainingDivergedError, train
from .pipeline import PipelineStageError, count_people, count_stream, model_input_kind
from .projection import (
    classifier_image,
    read_image_ndjson,
    read_pool_csv,
    write_image_ndjson,
    write_pool_csv,
)
from .quantize import (
    QuantizedModel,
    model_size,
    quantize_model,
    quantized_forward,
    quantized_reconstruction_error,
)
from .simulate import derive_seed, gen_ground_pool, gen_labeled_dataset, make_count_scene

TRUTH_HEADER = "frame_id,n_people"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # raise instead of sys.exit(2)
        raise UsageError(f"{self.prog}: {message}")


def _infer_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    if path.endswith(".csv"):
        return "csv"
    if path.endswith((".ndjson", ".jsonl")):
        return "ndjson"
    raise UsageError(f"cannot infer frame format from {path!r}; pass --format")


def _load_config(path: str | None) -> PipelineConfig:
    return load_config(path) if path else DEFAULT_CONFIG


def _read_truth(path: str) -> dict[int, int]:
    truth: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != TRUTH_HEADER:
            raise ValueError(f"{path}: expected header {TRUTH_HEADER!r}, got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 fields")
            truth[int(parts[0])] = int(parts[1])
    return truth


def _print_metrics(m) -> None:
    print(f"n {m.n}")
    print(f"tp {m.tp} fp {m.fp} fn {m.fn} tn {m.tn}")
    print(f"accuracy {m.accuracy:.6f}")
    print(f"precision {m.precision:.6f}")
    print(f"recall {m.recall:.6f}")
    print(f"f1 {m.f1:.6f}")
    if m.degenerate:
        print("warning: some ratios had empty denominators and report 0.0")


# --- simulate ----------------------------------------------------------------


def _cmd_simulate_scenes(args) -> int:
    rng_path = 0x5CE  # namespace for the per-scene human-count draw
    frames = []
    truth_rows = []
    for i in range(args.scenes):
        k_rng = np.random.default_rng(np.random.SeedSequence([args.seed, rng_path, i]))
        k = int(k_rng.integers(0, args.max_humans + 1))
        frame, _, n_humans = make_count_scene(
            k, args.clutter, derive_seed(args.seed, i), frame_id=i,
            min_pts=args.min_pts,
        )
        frames.append(frame)
        truth_rows.append((i, n_humans))
    fmt = _infer_format(args.out, args.format)
    with open(args.out, "wb") as fh:
        fh.write(write_frames(frames, fmt))
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            fh.write(TRUTH_HEADER + "\n")
            for fid, n in truth_rows:
                fh.write(f"{fid},{n}\n")
    print(f"wrote {len(frames)} scenes to {args.out}")
    return 0


def _cmd_simulate_clusters(args) -> int:
    if not args.features and not args.images:
        raise UsageError("simulate clusters: pass --features and/or --images")
    if args.images and not args.pool:
        raise UsageError("simulate clusters: --images needs --pool for padding")
    clusters, labels = gen_labeled_dataset(args.humans, args.clutter, args.seed)
    if args.features:
        vectors = np.stack([extract_features(c) for c in clusters])
        with open(args.features, "wb") as fh:
            fh.write(write_feature_csv(vectors, labels))
        print(f"wrote {len(clusters)} feature rows to {args.features}")
    if args.images:
        with open(args.pool, "rb") as fh:
            pool = read_pool_csv(fh)
        images = [
            classifier_image(c, pool, derive_seed(args.seed, 0x1A6, i))
            for i, c in enumerate(clusters)
        ]
        with open(args.images, "wb") as fh:
            fh.write(write_image_ndjson(images, labels))
        print(f"wrote {len(clusters)} images to {args.images}")
    return 0


def _cmd_simulate_pool(args) -> int:
    pool = gen_ground_pool(args.scenes, args.seed)
    if pool.shape[0] == 0:
        raise RuntimeError("generated an empty background pool")
    with open(args.out, "wb") as fh:
        fh.write(write_pool_csv(pool))
    print(f"wrote {pool.shape[0]} pool points to {args.out}")
    return 0


# --- stage commands ----------------------------------------------------------


def _cmd_preprocess(args) -> int:
    cfg = _load_config(args.config)
    in_fmt = _infer_format(args.input, args.in_format)
    out_fmt = _infer_format(args.output, args.out_format)
    with open(args.input, "r", encoding="utf-8") as fh:
        frames = parse_frames(fh, in_fmt)
    kept = []
    dropped = 0
    for frame in frames:
        clean = apply_roi(frame, cfg.roi)
        if len(clean) == 0:
            dropped += 1
        else:
            kept.append(clean)
    with open(args.output, "wb") as fh:
        fh.write(write_frames(kept, out_fmt))
    print(f"kept {len(kept)} of {len(frames)} frames ({dropped} emptied)")
    return 0


def _cluster_frame(points: np.ndarray, cfg: PipelineConfig):
    """(epsilon, degenerate, assignment-or-None) for one preprocessed frame."""
    if points.shape[0] < max(3, cfg.min_pts):
        return 0.0, True, None
    elbow = choose_epsilon(points, min_pts=cfg.min_pts)
    if elbow.epsilon <= 0.0:
        return float(elbow.epsilon), elbow.degenerate, None
    assignment = dbscan(points, DbscanParams(float(elbow.epsilon), cfg.min_pts))
    return float(elbow.epsilon), elbow.degenerate, assignment


def _cmd_cluster(args) -> int:
    import json as _json

    cfg = _load_config(args.config)
    fmt = _infer_format(args.input, args.format)
    with open(args.input, "r", encoding="utf-8") as fh:
        frames = parse_frames(fh, fmt)
    with open(args.output, "w", encoding="utf-8") as out:
        for frame in frames:
            eps, degenerate, assignment = _cluster_frame(frame.points, cfg)
            if assignment is None:
                labels = [-1] * len(frame)
                n_clusters = 0
            else:
                labels = assignment.labels.tolist()
                n_clusters = assignment.n_clusters
            out.write(
                _json.dumps(
                    {
                        "frame_id": frame.frame_id,
                        "n_points": len(frame),
                        "epsilon": eps,
                        "degenerate": degenerate,
                        "n_clusters": n_clusters,
                        "labels": labels,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
    print(f"clustered {len(frames)} frames into {args.output}")
    return 0


def _cmd_featurize(args) -> int:
    cfg = _load_config(args.config)
    fmt = _infer_format(args.input, args.format)
    spec = SliceSpec(dz=cfg.slice_dz)
    with open(args.input, "r", encoding="utf-8") as fh:
        frames = parse_frames(fh, fmt)
    rows = []
    for frame in frames:
        _, _, assignment = _cluster_frame(frame.points, cfg)
        if assignment is None:
            continue
        for cluster in extract_clusters(frame.points, assignment):
            rows.append(extract_features(cluster, spec))
    if not rows:
        raise RuntimeError("no clusters found; nothing to featurize")
    vectors = np.stack(rows)
    labels = np.full(vectors.shape[0], -1, dtype=np.int64)  # unlabeled
    with open(args.output, "wb") as fh:
        fh.write(write_feature_csv(vectors, labels))
    print(f"wrote {vectors.shape[0]} feature rows to {args.output}")
    return 0


# --- training ----------------------------------------------------------------


def _cmd_train_ae(args) -> int:
    vectors, labels = _read_features(args.features)
    val_vectors, val_labels = _read_features(args.val_features)
    person = vectors[labels == 1]
    if person.shape[0] < 2:
        raise RuntimeError("training set needs at least 2 person rows")
    stats = fit_normalizer(person)
    x = apply_normalizer(person, stats)
    cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        loss="mse",
    )
    model, history = train(build_autoencoder(), x, x, cfg)
    result = choose_threshold(model, apply_normalizer(val_vectors, stats), val_labels)
    model.threshold = result.threshold
    model.metadata.update(
        {
            "normalizer_mean": stats.mean.tolist(),
            "normalizer_std": stats.std.tolist(),
            "threshold_f1": result.f1,
        }
    )
    save_model(model, args.output)
    print(f"final loss {history[-1]:.6f}")
    print(f"threshold {float(result.threshold)!r} (validation f1 {result.f1:.6f})")
    print(f"saved {args.output}")
    return 0


def _cmd_train_cnn(args) -> int:
    images, labels = _read_images(args.images)
    val_images, val_labels = _read_images(args.val_images)
    targets = np.eye(2)[np.asarray(labels, dtype=np.int64)]
    cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        loss="softmax_cross_entropy",
    )
    model, history = train(build_cnn2d(), images, targets, cfg)
    preds, _ = classify_cnn(model, val_images)
    metrics = compute_metrics(val_labels, preds)
    model.metadata["val_accuracy"] = metrics.accuracy
    save_model(model, args.output)
    print(f"final loss {history[-1]:.6f}")
    print(f"validation accuracy {metrics.accuracy:.6f}")
    print(f"saved {args.output}")
    return 0


def _read_features(path: str):
    with open(path, "rb") as fh:
        return read_feature_csv(fh)


def _read_images(path: str):
    with open(path, "rb") as fh:
        return read_image_ndjson(fh)


# --- evaluation --------------------------------------------------------------


def _classify_feature_rows(model, vectors: np.ndarray) -> np.ndarray:
    meta = model.metadata or {}
    mean, std = meta.get("normalizer_mean"), meta.get("normalizer_std")
    if mean is None or std is None:
        raise RuntimeError("feature model file carries no normalizer statistics")
    if model.threshold is None:
        raise RuntimeError("feature model file carries no threshold")
    x = apply_normalizer(vectors, FeatureStats(np.asarray(mean), np.asarray(std)))
    if isinstance(model, QuantizedModel):
        errors = np.atleast_1d(quantized_reconstruction_error(model, x))
        return (errors <= model.threshold).astype(np.int64)
    return np.atleast_1d(classify_ae(model, model.threshold, x))


def _cmd_evaluate_features(args) -> int:
    model = load_model(args.model)
    if model_input_kind(model) != "features":
        raise RuntimeError("model does not take feature vectors")
    vectors, labels = _read_features(args.features)
    preds = _classify_feature_rows(model, vectors)
    _print_metrics(compute_metrics(labels, preds))
    return 0


def _cmd_evaluate_images(args) -> int:
    model = load_model(args.model)
    if model_input_kind(model) != "images":
        raise RuntimeError("model does not take projection images")
    images, labels = _read_images(args.images)
    if isinstance(model, QuantizedModel):
        preds, _ = quantized_forward(model, images)
    else:
        preds, _ = classify_cnn(model, images)
    _print_metrics(compute_metrics(labels, np.atleast_1d(preds)))
    return 0


def _cmd_evaluate_count(args) -> int:
    model = load_model(args.model)
    cfg = _load_config(args.config)
    pool = None
    if args.pool:
        with open(args.pool, "rb") as fh:
            pool = read_pool_csv(fh)
    truth = _read_truth(args.truth)
    fmt = _infer_format(args.frames, args.format)
    expected = []
    predicted = []
    with open(args.frames, "r", encoding="utf-8") as fh:
        for frame in stream_frames(fh, fmt):
            if frame.frame_id not in truth:
                raise ValueError(f"no truth row for frame {frame.frame_id}")
            report = count_people(frame, model, cfg, pool=pool, seed=args.seed)
            expected.append(truth[frame.frame_id])
            predicted.append(report.n_people)
    summary = counting_summary(expected, predicted)
    print(f"scenes {summary.n_scenes}")
    print(f"exact {summary.exact}")
    print(f"exact_rate {summary.exact_rate:.6f}")
    print(f"mean_abs_error {summary.mean_abs_error:.6f}")
    return 0


# --- quantize / bench / count / temps ----------------------------------------


def _cmd_quantize(args) -> int:
    model = load_model(args.model)
    if isinstance(model, QuantizedModel):
        raise RuntimeError(f"{args.model} is already quantized")
    kind = model_input_kind(model)
    if kind == "features":
        vectors, _ = _read_features(args.calib)
        meta = model.metadata or {}
        mean, std = meta.get("normalizer_mean"), meta.get("normalizer_std")
        if mean is None or std is None:
            raise RuntimeError("feature model file carries no normalizer statistics")
        reps = apply_normalizer(vectors, FeatureStats(np.asarray(mean), np.asarray(std)))
    else:
        reps, _ = _read_images(args.calib)
    qmodel = quantize_model(model, reps)
    save_model(qmodel, args.output)
    before, after = model_size(model), model_size(qmodel)
    print(f"float payload {before} bytes")
    print(f"quantized payload {after} bytes ({after / before:.4f} of float)")
    print(f"saved {args.output}")
    return 0


def _cmd_bench(args) -> int:
    model = load_model(args.model)
    cfg = _load_config(args.config)
    pool = None
    if args.pool:
        with open(args.pool, "rb") as fh:
            pool = read_pool_csv(fh)
    fmt = _infer_format(args.frames, args.format)
    with open(args.frames, "r", encoding="utf-8") as fh:
        frames = parse_frames(fh, fmt)
    if not frames:
        raise RuntimeError("no frames to benchmark")
    report = latency_bench(
        lambda fr: count_people(fr, model, cfg, pool=pool, seed=args.seed),
        frames,
        warmup=args.warmup,
        budget_ms=args.budget_ms,
    )
    print(f"frames {report.n}")
    print(f"mean_ms {report.mean_ms:.3f}")
    print(f"p50_ms {report.p50_ms:.3f}")
    print(f"p95_ms {report.p95_ms:.3f}")
    print(f"max_ms {report.max_ms:.3f}")
    print(f"budget_ms {report.budget_ms:.3f}")
    print(f"within_budget {str(report.within_budget).lower()}")
    return 0


def _cmd_count(args) -> int:
    model = load_model(args.model)
    cfg = _load_config(args.config)
    pool = None
    if args.pool:
        with open(args.pool, "rb") as fh:
            pool = read_pool_csv(fh)
    if args.input == "-":
        fmt = args.format or "ndjson"
        src = sys.stdin
    else:
        fmt = _infer_format(args.input, args.format)
        src = open(args.input, "r", encoding="utf-8")
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    try:
        reports = count_stream(
            stream_frames(src, fmt), model, cfg, pool=pool, seed=args.seed
        )
        for report in reports:
            out.write(report.to_json() + "\n")
    finally:
        if src is not sys.stdin:
            src.close()
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_temps(args) -> int:
    device, dev_skipped = read_temperature_csv(args.device)
    weather, ref_skipped = read_temperature_csv(args.weather)
    report = temperature_analysis(device, weather)
    for hour, dev, ref, diff in report.hours:
        stamp = hour.strftime("%Y-%m-%dT%H:00Z")
        print(f"{stamp} device {dev:.2f} reference {ref:.2f} diff {diff:+.2f}")
    print(f"device_max {report.raw_max:.2f}")
    print(f"device_min {report.raw_min:.2f}")
    print(f"device_mean {report.raw_mean:.2f}")
    print(f"hours {report.n_hours}")
    print(f"mean_bias {report.mean_bias:+.3f}")
    print(f"mean_abs_diff {report.mean_abs_diff:.3f}")
    if dev_skipped or ref_skipped:
        print(f"skipped {dev_skipped} device and {ref_skipped} reference rows")
    return 0


# --- parser ------------------------------------------------------------------


def _add_seed(p, default=0):
    p.add_argument("--seed", type=int, default=default)


def _add_config(p):
    p.add_argument("--config", help="pipeline INI file (defaults built in)")


def build_parser() -> _Parser:
    parser = _Parser(prog="lidarcount", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="generate synthetic data")
    sim_sub = sim.add_subparsers(dest="what", required=True, parser_class=_Parser)

    p = sim_sub.add_parser("scenes", help="multi-object counting scenes")
    p.add_argument("--scenes", type=int, default=20)
    p.add_argument("--max-humans", type=int, default=3)
    p.add_argument("--clutter", type=int, default=2)
    p.add_argument(
        "--min-pts",
        type=int,
        default=12,
        help="density threshold the scenes are screened for; count with the same value",
    )
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="write frame_id,n_people CSV here")
    p.add_argument("--format", choices=("csv", "ndjson"))
    _add_seed(p)
    p.set_defaults(fn=_cmd_simulate_scenes)

    p = sim_sub.add_parser("clusters", help="labeled single-object clusters")
    p.add_argument("--humans", type=int, default=100)
    p.add_argument("--clutter", type=int, default=100)
    p.add_argument("--features", help="write feature CSV here")
    p.add_argument("--images", help="write projection-image NDJSON here")
    p.add_argument("--pool", help="background pool CSV (needed for --images)")
    _add_seed(p)
    p.set_defaults(fn=_cmd_simulate_clusters)

    p = sim_sub.add_parser("pool", help="background point pool")
    p.add_argument("--scenes", type=int, default=10)
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(fn=_cmd_simulate_pool)

    p = sub.add_parser("preprocess", help="ground removal + ROI crop")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--in-format", choices=("csv", "ndjson"))
    p.add_argument("--out-format", choices=("csv", "ndjson"))
    _add_config(p)
    p.set_defaults(fn=_cmd_preprocess)

    p = sub.add_parser("cluster", help="adaptive-epsilon clustering per frame")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="NDJSON labels per frame")
    p.add_argument("--format", choices=("csv", "ndjson"))
    _add_config(p)
    p.set_defaults(fn=_cmd_cluster)

    p = sub.add_parser("featurize", help="feature vectors for every cluster")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=("csv", "ndjson"))
    _add_config(p)
    p.set_defaults(fn=_cmd_featurize)

    tr = sub.add_parser("train", help="train a classifier from scratch")
    tr_sub = tr.add_subparsers(dest="what", required=True, parser_class=_Parser)

    p = tr_sub.add_parser("ae", help="feature autoencoder + threshold")
    p.add_argument("--features", required=True)
    p.add_argument("--val-features", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    _add_seed(p)
    p.set_defaults(fn=_cmd_train_ae)

    p = tr_sub.add_parser("cnn", help="three-view projection classifier")
    p.add_argument("--images", required=True)
    p.add_argument("--val-images", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=5e-4)
    _add_seed(p)
    p.set_defaults(fn=_cmd_train_cnn)

    ev = sub.add_parser("evaluate", help="score a model")
    ev_sub = ev.add_subparsers(dest="what", required=True, parser_class=_Parser)

    p = ev_sub.add_parser("features", help="labeled feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.set_defaults(fn=_cmd_evaluate_features)

    p = ev_sub.add_parser("images", help="labeled image NDJSON")
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True)
    p.set_defaults(fn=_cmd_evaluate_images)

    p = ev_sub.add_parser("count", help="whole-pipeline counting accuracy")
    p.add_argument("--model", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--pool")
    p.add_argument("--format", choices=("csv", "ndjson"))
    _add_config(p)
    _add_seed(p)
    p.set_defaults(fn=_cmd_evaluate_count)

    p = sub.add_parser("quantize", help="8-bit post-training quantization")
    p.add_argument("--model", required=True)
    p.add_argument("--calib", required=True, help="feature CSV or image NDJSON")
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_quantize)

    p = sub.add_parser("bench", help="end-to-end frame latency")
    p.add_argument("--model", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--pool")
    p.add_argument("--format", choices=("csv", "ndjson"))
    p.add_argument("--warmup", type=int, default=30)
    p.add_argument("--budget-ms", type=float, default=16.0)
    _add_config(p)
    _add_seed(p)
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("count", help="stream frames to people counts (NDJSON)")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="-", help="frames path or - for standard input")
    p.add_argument("--output", default="-", help="output path or - for stdout")
    p.add_argument("--pool")
    p.add_argument("--format", choices=("csv", "ndjson"))
    _add_config(p)
    _add_seed(p)
    p.set_defaults(fn=_cmd_count)

    p = sub.add_parser("temps", help="hourly device temperature vs reference")
    p.add_argument("--device", required=True)
    p.add_argument("--weather", required=True)
    p.set_defaults(fn=_cmd_temps)

    return parser


def run_command(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (
        FrameFormatError,
        ModelFormatError,
        PipelineStageError,
        TrainingDivergedError,
        ValueError,
        OSError,
        RuntimeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
