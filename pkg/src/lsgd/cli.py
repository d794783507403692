"""Command-line interface: split, train, predict, evaluate, bench, gen-blobs.

Exit codes: 0 success, 1 data/runtime error, 2 usage error. Every train run
writes a metrics JSON with a reproducibility stanza (all effective flags);
re-running from that stanza reproduces the model file byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Iterator

import numpy as np

from .dataio import (
    BlockSpec,
    DataBlock,
    DataFormatError,
    block_size_for_budget,
    iter_dense_binary,
    iter_sparse_text,
    read_dense_header,
    read_sparse_text,
    scan_sparse_text,
    split_blocks,
    write_dense_binary,
    write_sparse_text,
)
from .evaluate import BenchConfig, bench_compare, evaluate, make_blobs
from .incremental import inc_predict_batch, inc_train
from .linear import SgdParams
from .serialize import load_model, save_model

METRICS_SCHEMA_VERSION = 1
_PREDICT_CHUNK = 8192

_SIZE_UNITS = {
    "": 1,
    "b": 1,
    "kb": 1000,
    "mb": 1000**2,
    "gb": 1000**3,
    "kib": 1024,
    "mib": 1024**2,
    "gib": 1024**3,
}


def parse_size(text: str) -> int:
    """'2GiB', '512MiB', '1000000' -> bytes."""
    s = text.strip().lower()
    digits = s.rstrip("kmgib ")
    unit = s[len(digits) :].strip()
    if unit not in _SIZE_UNITS:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    try:
        value = int(digits)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return value * _SIZE_UNITS[unit]


_SCHEDULE_FLAG = {"constant": "constant", "inverse": "inverse-scaling"}


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="dataset file")
    p.add_argument("--format", choices=("sparse", "dense"), default="dense", help="dataset format")


def _add_blocking_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--blocks", type=int, help="split into this many blocks")
    g.add_argument("--block-size", type=int, help="points per block")
    g.add_argument(
        "--memory-budget",
        type=parse_size,
        help="bytes of block memory to allow (accepts KiB/MiB/GiB suffixes); default 2GiB",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsgd", description="Out-of-core multiclass linear classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a block-wise local SGD ensemble")
    _add_io_flags(p)
    p.add_argument("--model-out", required=True, help="model file to write")
    p.add_argument("--metrics-out", help="metrics JSON path (default: <model-out>.metrics.json)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, help="clusters per block")
    g.add_argument("--cluster-size", type=int, help="derive k = ceil(block_points / cluster_size); default 500")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--eta", type=float, default=0.001, help="learning rate")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4, help="regularization strength")
    p.add_argument("--schedule", choices=("constant", "inverse"), default="constant")
    _add_blocking_flags(p)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--kmeans", choices=("lloyd", "minibatch"), default="lloyd")
    p.add_argument("--dims", type=int, help="declared dimensionality (sparse input)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write one predicted label per input point")
    p.add_argument("--model", required=True)
    _add_io_flags(p)
    p.add_argument("--output", required=True, help="predictions file to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a model on labelled data")
    p.add_argument("--model", required=True)
    _add_io_flags(p)
    p.add_argument("--output-json", help="also write the metrics JSON here")
    p.add_argument("--csv", help="also write per-class rows as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="compare training configs on one dataset")
    _add_io_flags(p)
    p.add_argument("--configs", required=True, help="JSON file: list of config objects")
    p.add_argument("--output-json", help="write rows + metadata here")
    p.add_argument("--csv", help="write rows as CSV")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("split", help="split a dataset file into block files")
    _add_io_flags(p)
    p.add_argument("--output-dir", required=True)
    _add_blocking_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("gen-blobs", help="generate a synthetic Gaussian blob dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--points-per-class", type=int, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=("sparse", "dense"), default="dense")
    p.set_defaults(func=cmd_gen_blobs)

    return parser


def _resolve_block_size(args, n_points: int, n_dims: int) -> int:
    if args.block_size is not None:
        if args.block_size < 1:
            raise ValueError(f"--block-size must be >= 1, got {args.block_size}")
        return args.block_size
    if args.blocks is not None:
        if args.blocks < 1:
            raise ValueError(f"--blocks must be >= 1, got {args.blocks}")
        return math.ceil(n_points / args.blocks)
    budget = args.memory_budget if args.memory_budget is not None else parse_size("2GiB")
    return min(block_size_for_budget(budget, n_dims), n_points)


def cmd_train(args) -> int:
    if args.format == "dense":
        header = read_dense_header(args.input)
        if args.dims is not None and args.dims != header.n_dims:
            raise DataFormatError(f"{args.input}: --dims {args.dims} does not match file dimensionality {header.n_dims}")
        dims = header.n_dims
        n_points = header.n_points
        label_map = np.arange(header.n_classes, dtype=np.int64)
        points = iter_dense_binary(args.input)
    else:
        header, label_map, points = read_sparse_text(args.input, n_dims=args.dims)
        dims = header.n_dims
        n_points = header.n_points

    block_size = _resolve_block_size(args, n_points, dims)
    k = args.k
    cluster_size = args.cluster_size
    if k is None and cluster_size is None:
        cluster_size = 500
    params = SgdParams(
        lam=args.lam,
        eta=args.eta,
        epochs=args.epochs,
        seed=args.seed,
        schedule=_SCHEDULE_FLAG[args.schedule],
    )
    t0 = time.perf_counter()
    model = inc_train(
        split_blocks(points, BlockSpec(block_size), n_dims=dims),
        k,
        params,
        cluster_size=cluster_size,
        n_classes=int(label_map.size),
        label_map=label_map,
        workers=args.threads,
        kmeans_mode=args.kmeans,
    )
    train_seconds = time.perf_counter() - t0
    save_model(model, args.model_out)

    stanza = {
        "command": "train",
        "input": os.path.abspath(args.input),
        "format": args.format,
        "model_out": os.path.abspath(args.model_out),
        "k": k,
        "cluster_size": cluster_size,
        "epochs": args.epochs,
        "eta": args.eta,
        "lambda": args.lam,
        "schedule": args.schedule,
        "block_size": block_size,
        "threads": args.threads,
        "seed": args.seed,
        "kmeans": args.kmeans,
        "dims": dims,
    }
    metrics = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "command": "train",
        "train_seconds": train_seconds,
        "n_blocks": model.n_members,
        "n_classes": model.n_classes,
        "n_dims": model.n_dims,
        "blocks": [
            {
                "block_id": prov.block_id,
                "n_points": prov.n_points,
                "k": prov.k,
                "n_local_models": member.k,
                "cluster_sizes": [lm.train_count for lm in member.local_models],
                "classes_per_cluster": [int(lm.model.class_ids.size) for lm in member.local_models],
            }
            for member, prov in zip(model.members, model.provenance)
        ],
        "flags": stanza,
    }
    metrics_path = args.metrics_out or args.model_out + ".metrics.json"
    with open(metrics_path, "w", encoding="ascii") as fh:
        json.dump(metrics, fh, indent=2)
        fh.write("\n")
    print(f"trained {model.n_members} member(s) on {n_points} points in {train_seconds:.2f}s")
    print(f"model: {args.model_out}")
    print(f"metrics: {metrics_path}")
    return 0


def argv_from_stanza(stanza: dict, model_out: str | None = None, metrics_out: str | None = None) -> list[str]:
    """Rebuild a train argv from a metrics reproducibility stanza."""
    argv = [
        "train",
        "--input", stanza["input"],
        "--format", stanza["format"],
        "--model-out", model_out or stanza["model_out"],
        "--epochs", str(stanza["epochs"]),
        "--eta", repr(float(stanza["eta"])),
        "--lambda", repr(float(stanza["lambda"])),
        "--schedule", stanza["schedule"],
        "--block-size", str(stanza["block_size"]),
        "--threads", str(stanza["threads"]),
        "--seed", str(stanza["seed"]),
        "--kmeans", stanza["kmeans"],
        "--dims", str(stanza["dims"]),
    ]
    if stanza["k"] is not None:
        argv += ["--k", str(stanza["k"])]
    else:
        argv += ["--cluster-size", str(stanza["cluster_size"])]
    if metrics_out:
        argv += ["--metrics-out", metrics_out]
    return argv


def _labelled_blocks(args, n_dims: int, block_size: int = 65536) -> Iterator[DataBlock]:
    """Blocks with labels left in the file's original vocabulary."""
    if args.format == "dense":
        header = read_dense_header(args.input)
        if header.n_dims != n_dims:
            raise DataFormatError(f"{args.input}: model has {n_dims} dims, data has {header.n_dims}")
        points = iter_dense_binary(args.input)
    else:
        points = iter_sparse_text(args.input, n_dims, require_labels=True)
    return split_blocks(points, BlockSpec(block_size), n_dims=n_dims)


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if args.format == "dense":
        header = read_dense_header(args.input)
        if header.n_dims != model.n_dims:
            raise DataFormatError(f"{args.input}: model has {model.n_dims} dims, data has {header.n_dims}")
        points = iter_dense_binary(args.input)
    else:
        points = iter_sparse_text(args.input, model.n_dims, require_labels=False)

    written = 0
    with open(args.output, "w", encoding="ascii") as out:
        batch: list[np.ndarray] = []

        def flush() -> None:
            nonlocal written
            if not batch:
                return
            feats = np.stack(batch)
            preds = model.label_map[inc_predict_batch(model, feats)]
            out.write("\n".join(str(int(p)) for p in preds) + "\n")
            written += len(batch)
            batch.clear()

        for pt in points:
            batch.append(pt.features)
            if len(batch) >= _PREDICT_CHUNK:
                flush()
        flush()
    print(f"wrote {written} prediction(s) to {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    report = evaluate(model, _labelled_blocks(args, model.n_dims))
    doc = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "command": "evaluate",
        "model": os.path.abspath(args.model),
        "input": os.path.abspath(args.input),
        "format": args.format,
        **report.to_dict(),
    }
    print(f"overall accuracy: {100.0 * report.accuracy:.2f}")
    print(json.dumps(doc, indent=2))
    if args.output_json:
        with open(args.output_json, "w", encoding="ascii") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    if args.csv:
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write("label,correct,total,accuracy\n")
            for label, (c, t) in sorted(report.per_class.items()):
                fh.write(f"{label},{c},{t},{c / t}\n")
    return 0


def _load_dataset_arrays(args) -> tuple[np.ndarray, np.ndarray]:
    """Whole dataset in memory, labels as contiguous ids (bench is desk scale)."""
    if args.format == "dense":
        header = read_dense_header(args.input)
        points = iter_dense_binary(args.input)
        dims = header.n_dims
    else:
        header, _, points = read_sparse_text(args.input)
        dims = header.n_dims
    feats = np.empty((header.n_points, dims), dtype=np.float32)
    labels = np.empty(header.n_points, dtype=np.int64)
    for i, pt in enumerate(points):
        feats[i] = pt.features
        labels[i] = pt.label
    return feats, labels


def cmd_bench(args) -> int:
    with open(args.configs, "r", encoding="ascii") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise ValueError(f"{args.configs}: expected a non-empty JSON list of configs")
    configs = []
    for i, c in enumerate(raw):
        try:
            params = SgdParams(
                lam=c.get("lambda", 1e-4),
                eta=c.get("eta", 0.001),
                epochs=c.get("epochs", 50),
                seed=c.get("seed", 42),
                schedule=_SCHEDULE_FLAG[c.get("schedule", "constant")],
            )
            configs.append(
                BenchConfig(
                    label=c["label"],
                    k=c["k"],
                    blocks=c.get("blocks", 1),
                    params=params,
                    kmeans_mode=c.get("kmeans", "lloyd"),
                    workers=c.get("workers", 1),
                )
            )
        except KeyError as exc:
            raise ValueError(f"{args.configs}: config {i} missing field {exc}") from None

    dataset = _load_dataset_arrays(args)
    rows = bench_compare(dataset, configs, test_fraction=args.test_fraction, split_seed=args.split_seed)
    doc = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "command": "bench",
        "input": os.path.abspath(args.input),
        "test_fraction": args.test_fraction,
        "split_seed": args.split_seed,
        "rows": rows,
    }
    header = f"{'label':<16} {'k':>4} {'blocks':>6} {'train_s':>9} {'predict_s':>9} {'accuracy':>9}"
    print(header)
    for r in rows:
        print(f"{r['label']:<16} {r['k']:>4} {r['blocks']:>6} {r['train_seconds']:>9.3f} {r['predict_seconds']:>9.3f} {r['accuracy']:>9.4f}")
    if args.output_json:
        with open(args.output_json, "w", encoding="ascii") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    if args.csv:
        cols = list(rows[0].keys())
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write(",".join(cols) + "\n")
            for r in rows:
                fh.write(",".join(str(r[c]) for c in cols) + "\n")
    return 0


def cmd_split(args) -> int:
    os.makedirs(args.output_dir, exist_ok=True)
    stem, ext = os.path.splitext(os.path.basename(args.input))
    out_paths = []
    if args.format == "dense":
        header = read_dense_header(args.input)
        block_size = _resolve_block_size(args, header.n_points, header.n_dims)
        points = iter_dense_binary(args.input)
        for block in split_blocks(points, BlockSpec(block_size), n_dims=header.n_dims):
            path = os.path.join(args.output_dir, f"{stem}.b{block.block_id:04d}{ext or '.bin'}")
            write_dense_binary(path, block.features, block.labels, n_classes=header.n_classes)
            out_paths.append(path)
    else:
        n_points, _, _ = scan_sparse_text(args.input)
        if n_points == 0:
            raise DataFormatError(f"{args.input}: no data")
        block_size = _resolve_block_size(args, n_points, max(1, _sparse_dims(args.input)))
        out_paths = _split_sparse_lines(args.input, args.output_dir, stem, ext or ".txt", block_size)
    for path in out_paths:
        print(path)
    print(f"wrote {len(out_paths)} block file(s) to {args.output_dir}")
    return 0


def _sparse_dims(path: str) -> int:
    _, max_idx, _ = scan_sparse_text(path)
    return max_idx


def _split_sparse_lines(path: str, out_dir: str, stem: str, ext: str, block_size: int) -> list[str]:
    """Pass lines through untouched so labels and formatting are preserved."""
    out_paths: list[str] = []
    out = None
    count = 0
    try:
        with open(path, "r", encoding="ascii") as fh:
            for line in fh:
                if not line.strip():
                    continue
                if out is None or count == block_size:
                    if out is not None:
                        out.close()
                    p = os.path.join(out_dir, f"{stem}.b{len(out_paths):04d}{ext}")
                    out = open(p, "w", encoding="ascii")
                    out_paths.append(p)
                    count = 0
                out.write(line if line.endswith("\n") else line + "\n")
                count += 1
    finally:
        if out is not None:
            out.close()
    return out_paths


def cmd_gen_blobs(args) -> int:
    features, labels = make_blobs(args.classes, args.points_per_class, args.dims, args.separation, args.seed)
    if args.format == "dense":
        write_dense_binary(args.output, features, labels, n_classes=args.classes)
    else:
        write_sparse_text(args.output, features, labels)
    print(f"wrote {features.shape[0]} points ({args.classes} classes, {args.dims} dims) to {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DataFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
