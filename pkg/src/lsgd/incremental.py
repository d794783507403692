"""Incremental training over a stream of blocks, one block in memory at a time.

Each block trains an independent per-block ensemble (a voting member); the
stream is consumed strictly sequentially and the block's arrays are released
before the next block is pulled. Prediction collects one vote per member and
returns the majority, ties going to the earliest member's tied class.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .dataio import DataBlock
from .ensemble import KSgdModel, ksgd_predict_batch, ksgd_train
from .linear import SgdParams
from .seeding import child_seed


@dataclass(frozen=True)
class BlockProvenance:
    """Where a voting member came from."""

    block_id: int
    n_points: int
    k: int


@dataclass(frozen=True)
class IncKSgdModel:
    """Voting ensemble of per-block models, in arrival order."""

    members: tuple[KSgdModel, ...]
    n_dims: int
    n_classes: int
    label_map: np.ndarray  # (n_classes,) int64: internal id -> original label
    provenance: tuple[BlockProvenance, ...]

    def __post_init__(self) -> None:
        if len(self.members) == 0:
            raise ValueError("an ensemble needs at least one member")
        if self.label_map.shape != (self.n_classes,):
            raise ValueError("label_map must list one original label per class")

    @property
    def n_members(self) -> int:
        return len(self.members)


def majority_vote(votes: Sequence[int]) -> int:
    """Most frequent vote; on a tie, the earliest vote among the tied classes."""
    if len(votes) == 0:
        raise ValueError("cannot take a majority of zero votes")
    counts = Counter(votes)
    best = max(counts.values())
    for v in votes:
        if counts[v] == best:
            return int(v)
    raise AssertionError("unreachable")


def inc_train(
    blocks: Iterable[DataBlock],
    k: int | None,
    params: SgdParams,
    cluster_size: int | None = None,
    n_classes: int | None = None,
    label_map: np.ndarray | None = None,
    workers: int = 1,
    kmeans_mode: str = "lloyd",
    kmeans_iters: int = 100,
    batch_size: int = 1024,
) -> IncKSgdModel:
    """Train one voting member per block from a sequential block stream.

    Exactly one of k / cluster_size picks the cluster count: a fixed k for
    every block, or k = ceil(block_points / cluster_size) per block. Block t
    trains with seed child_seed(params.seed, t), so a one-block stream equals
    a direct ksgd_train on that block.

    The stream is consumed lazily and each block's arrays are dropped before
    the next block is requested, keeping at most one block resident.
    """
    if (k is None) == (cluster_size is None):
        raise ValueError("exactly one of k or cluster_size must be given")
    if k is not None and k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if cluster_size is not None and cluster_size < 1:
        raise ValueError(f"cluster_size must be >= 1, got {cluster_size}")

    members: list[KSgdModel] = []
    provenance: list[BlockProvenance] = []
    max_label = -1
    dims: int | None = None
    stream = iter(blocks)
    t = 0
    while True:
        try:
            block = next(stream)
        except StopIteration:
            break
        feats, labs = block.features, block.labels
        block_id = block.block_id
        del block
        m = feats.shape[0]
        if dims is None:
            dims = int(feats.shape[1])
        elif feats.shape[1] != dims:
            raise ValueError(f"block {block_id} has {feats.shape[1]} dims, expected {dims}")
        k_t = k if k is not None else math.ceil(m / cluster_size)
        if m < k_t:
            raise ValueError(f"block {block_id} has {m} points, cannot make {k_t} clusters")
        member = ksgd_train(
            feats,
            labs,
            k_t,
            replace(params, seed=child_seed(params.seed, t)),
            workers=workers,
            kmeans_mode=kmeans_mode,
            kmeans_iters=kmeans_iters,
            batch_size=batch_size,
        )
        if labs.size:
            max_label = max(max_label, int(labs.max()))
        members.append(member)
        provenance.append(BlockProvenance(block_id, m, k_t))
        del feats, labs
        t += 1
    if t == 0:
        raise ValueError("empty block stream")

    p = n_classes if n_classes is not None else max_label + 1
    if p < 1:
        raise ValueError("no classes seen in training data")
    if label_map is None:
        label_map = np.arange(p, dtype=np.int64)
    else:
        label_map = np.asarray(label_map, dtype=np.int64)
        if label_map.shape != (p,):
            raise ValueError(f"label_map must have {p} entries, got {label_map.shape}")
    return IncKSgdModel(tuple(members), int(dims), int(p), label_map, tuple(provenance))


def inc_predict_batch(model: IncKSgdModel, features) -> np.ndarray:
    """Majority-vote class id per row (internal ids, not original labels)."""
    feats = np.asarray(features)
    if feats.ndim != 2:
        raise ValueError("features must be a 2-D array")
    if feats.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: model has {model.n_dims} dims, data has {feats.shape[1]}")
    if feats.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    votes = np.stack([ksgd_predict_batch(m, feats) for m in model.members])
    return np.array([majority_vote(votes[:, i].tolist()) for i in range(feats.shape[0])], dtype=np.int64)


def inc_predict(model: IncKSgdModel, x) -> int:
    """Majority-vote class id for one point."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D array")
    return int(inc_predict_batch(model, x[np.newaxis, :])[0])


def predict_labels(model: IncKSgdModel, features) -> np.ndarray:
    """Majority-vote predictions mapped back to the original label vocabulary."""
    return model.label_map[inc_predict_batch(model, features)]
