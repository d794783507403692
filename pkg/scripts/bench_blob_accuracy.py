#!/usr/bin/env python3
"""Accuracy comparison of the block ensemble against a global baseline.

Runs the built-in benchmark harness on a separable blob dataset: a single
global k=1 model trained on everything versus a T-member ensemble trained
block by block with k clusters per block. Prints one row per configuration.
"""

import argparse

from lsgd import BenchConfig, SgdParams, bench_compare, make_blobs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", type=int, default=20)
    ap.add_argument("--points-per-class", type=int, default=200)
    ap.add_argument("--dims", type=int, default=16)
    ap.add_argument("--separation", type=float, default=20.0)
    ap.add_argument("--blocks", type=int, default=2)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=43)
    args = ap.parse_args()

    feats, labels = make_blobs(args.classes, args.points_per_class, args.dims,
                               separation=args.separation, seed=41)
    params = SgdParams(epochs=args.epochs, seed=args.seed)
    configs = [
        BenchConfig("global", k=1, blocks=1, params=params),
        BenchConfig(f"ensemble T={args.blocks} k={args.k}", k=args.k,
                    blocks=args.blocks, params=params),
    ]
    rows = bench_compare((feats, labels), configs, test_fraction=0.2, split_seed=42)

    cols = ["label", "k", "blocks", "epochs", "train_seconds", "predict_seconds",
            "accuracy", "peak_block_bytes"]
    print(" ".join(f"{c:>18}" for c in cols))
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(f"{v:>18.4f}" if isinstance(v, float) else f"{str(v):>18}")
        print(" ".join(cells))


if __name__ == "__main__":
    main()
