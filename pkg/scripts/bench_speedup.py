#!/usr/bin/env python3
"""Wall-clock comparison of global vs partitioned training on one block.

Generates a separable blob dataset, trains a single k=1 model and a k=K
partitioned model with identical epochs, and prints both times plus the
ratio. With well-separated classes most clusters see only a few of the
class labels, so the partitioned run does far less one-vs-rest work per
point; this script measures that effect directly.
"""

import argparse
import time

from lsgd import SgdParams, ksgd_train, make_blobs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", type=int, default=50)
    ap.add_argument("--points-per-class", type=int, default=2000)
    ap.add_argument("--dims", type=int, default=32)
    ap.add_argument("--k", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--seed", type=int, default=52)
    args = ap.parse_args()

    feats, labels = make_blobs(args.classes, args.points_per_class, args.dims,
                               separation=25.0, seed=51)
    params = SgdParams(epochs=args.epochs, seed=args.seed)
    print(f"dataset: {feats.shape[0]} points, {args.dims} dims, {args.classes} classes")

    # compile the jit kernels before timing anything
    warm_f, warm_l = make_blobs(3, 40, 4, separation=15.0, seed=0)
    ksgd_train(warm_f, warm_l, 2, SgdParams(epochs=1, seed=0), kmeans_mode="minibatch")
    ksgd_train(warm_f, warm_l, 1, SgdParams(epochs=1, seed=0))

    t0 = time.perf_counter()
    local = ksgd_train(feats, labels, args.k, params, workers=args.workers,
                       kmeans_mode="minibatch")
    t_local = time.perf_counter() - t0

    t0 = time.perf_counter()
    ksgd_train(feats, labels, 1, params)
    t_global = time.perf_counter() - t0

    classes_per_cluster = [lm.model.class_ids.size for lm in local.local_models]
    print(f"{'variant':<12} {'k':>4} {'epochs':>7} {'wall_s':>8}")
    print(f"{'global':<12} {1:>4} {args.epochs:>7} {t_global:>8.2f}")
    print(f"{'local':<12} {args.k:>4} {args.epochs:>7} {t_local:>8.2f}")
    print(f"speedup: {t_global / t_local:.2f}x")
    print(f"classes per cluster: min {min(classes_per_cluster)}, "
          f"max {max(classes_per_cluster)}, "
          f"mean {sum(classes_per_cluster) / len(classes_per_cluster):.1f}")


if __name__ == "__main__":
    main()
