"""Accuracy/timing evaluation, synthetic blob datasets, and config benchmarks.

Accuracy is exact counting with integer counters merged in block order, never
a floating mean. Comparison happens in the original label vocabulary: model
outputs are mapped through the model's label map before counting.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .dataio import DataBlock, array_blocks
from .incremental import IncKSgdModel, inc_predict_batch, inc_train
from .linear import SgdParams

CONFUSION_CLASS_LIMIT = 50  # suppress the quadratic table past this many classes


@dataclass(frozen=True)
class EvalReport:
    n_points: int
    n_correct: int
    accuracy: float
    per_class: dict[int, tuple[int, int]]  # original label -> (correct, total)
    confusion: dict[tuple[int, int], int] | None  # (true, pred) -> count
    predict_seconds: float

    def to_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "per_class": {
                str(label): {"correct": c, "total": t, "accuracy": c / t}
                for label, (c, t) in sorted(self.per_class.items())
            },
            "confusion": None
            if self.confusion is None
            else [[t, p, c] for (t, p), c in sorted(self.confusion.items())],
            "predict_seconds": self.predict_seconds,
        }


def evaluate(
    model: IncKSgdModel,
    source: Iterable[DataBlock],
    confusion_limit: int = CONFUSION_CLASS_LIMIT,
) -> EvalReport:
    """Score a model over a block stream whose labels are original vocabulary."""
    n_points = 0
    n_correct = 0
    per_class: dict[int, list[int]] = {}
    confusion: dict[tuple[int, int], int] | None = {} if model.n_classes <= confusion_limit else None
    predict_seconds = 0.0
    for block in source:
        if block.features.shape[1] != model.n_dims:
            raise ValueError(f"dimension mismatch: model has {model.n_dims} dims, block {block.block_id} has {block.features.shape[1]}")
        t0 = time.perf_counter()
        preds = model.label_map[inc_predict_batch(model, block.features)]
        predict_seconds += time.perf_counter() - t0
        truth = block.labels
        n_points += truth.size
        n_correct += int(np.count_nonzero(preds == truth))
        for t_lab, p_lab in zip(truth.tolist(), preds.tolist()):
            cell = per_class.setdefault(t_lab, [0, 0])
            cell[1] += 1
            if t_lab == p_lab:
                cell[0] += 1
            if confusion is not None:
                key = (t_lab, p_lab)
                confusion[key] = confusion.get(key, 0) + 1
    if n_points == 0:
        raise ValueError("empty test source")
    return EvalReport(
        n_points,
        n_correct,
        n_correct / n_points,
        {k: (v[0], v[1]) for k, v in per_class.items()},
        confusion,
        predict_seconds,
    )


def evaluate_arrays(model: IncKSgdModel, features, labels, confusion_limit: int = CONFUSION_CLASS_LIMIT) -> EvalReport:
    feats = np.asarray(features, dtype=np.float32)
    return evaluate(model, array_blocks(feats, labels, max(1, feats.shape[0])), confusion_limit)


def make_blobs(
    n_classes: int,
    points_per_class: int,
    n_dims: int,
    separation: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Unit-variance Gaussian blobs with class means at pairwise distance
    >= separation, globally shuffled so file-order blocks mix all classes.

    Means are sampled away from the origin: the models here have no bias
    term, so a class sitting on the origin would be inseparable by any
    homogeneous plane.

    Returns (features float32 (m, n), labels int64), m = n_classes *
    points_per_class. Deterministic per seed.
    """
    if n_classes < 1 or points_per_class < 1 or n_dims < 1:
        raise ValueError("counts must all be positive")
    if not separation > 0:
        raise ValueError(f"separation must be > 0, got {separation}")
    rng = np.random.default_rng(seed)

    # rejection-sample means in a box that grows until placement succeeds
    box = separation * (n_classes ** (1.0 / n_dims) + 1.0)
    means: list[np.ndarray] = []
    misses = 0
    while len(means) < n_classes:
        cand = rng.uniform(separation, separation + box, n_dims)
        if all(float(np.sum((cand - m) ** 2)) >= separation**2 for m in means):
            means.append(cand)
            misses = 0
        else:
            misses += 1
            if misses > 200:
                box *= 1.5
                misses = 0

    total = n_classes * points_per_class
    features = np.empty((total, n_dims), dtype=np.float64)
    labels = np.empty(total, dtype=np.int64)
    for c, mean in enumerate(means):
        lo = c * points_per_class
        features[lo : lo + points_per_class] = rng.normal(mean, 1.0, (points_per_class, n_dims))
        labels[lo : lo + points_per_class] = c
    order = rng.permutation(total)
    return features[order].astype(np.float32), labels[order]


@dataclass(frozen=True)
class BenchConfig:
    label: str
    k: int
    blocks: int
    params: SgdParams = field(default_factory=SgdParams)
    kmeans_mode: str = "lloyd"
    workers: int = 1


def _counting_blocks(features, labels, block_size: int, peak: list[int]) -> Iterator[DataBlock]:
    for block in array_blocks(features, labels, block_size):
        peak[0] = max(peak[0], block.features.nbytes + block.labels.nbytes)
        yield block


def bench_compare(
    dataset: tuple[np.ndarray, np.ndarray],
    configs: list[BenchConfig],
    test_fraction: float = 0.2,
    split_seed: int = 0,
) -> list[dict]:
    """Train every config on the same deterministic split and measure it.

    Returns one row per config: train/predict wall time, accuracy, and the
    peak bytes of block data resident during training.
    """
    if len(configs) == 0:
        raise ValueError("at least one config required")
    features, labels = dataset
    features = np.asarray(features, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64)
    m = features.shape[0]
    n_test = int(m * test_fraction)
    if m - n_test < 1 or n_test < 1:
        raise ValueError("split leaves an empty side")
    order = np.random.default_rng(split_seed).permutation(m)
    test_idx, train_idx = order[:n_test], order[n_test:]
    x_train, y_train = features[train_idx], labels[train_idx]
    x_test, y_test = features[test_idx], labels[test_idx]

    rows = []
    for cfg in configs:
        block_size = -(-x_train.shape[0] // cfg.blocks)  # ceil
        peak = [0]
        t0 = time.perf_counter()
        model = inc_train(
            _counting_blocks(x_train, y_train, block_size, peak),
            cfg.k,
            cfg.params,
            workers=cfg.workers,
            kmeans_mode=cfg.kmeans_mode,
        )
        train_seconds = time.perf_counter() - t0
        report = evaluate_arrays(model, x_test, y_test, confusion_limit=0)
        rows.append(
            {
                "label": cfg.label,
                "k": cfg.k,
                "blocks": cfg.blocks,
                "epochs": cfg.params.epochs,
                "workers": cfg.workers,
                "train_seconds": train_seconds,
                "predict_seconds": report.predict_seconds,
                "accuracy": report.accuracy,
                "peak_block_bytes": peak[0],
                "n_train": int(x_train.shape[0]),
                "n_test": int(x_test.shape[0]),
            }
        )
    return rows
