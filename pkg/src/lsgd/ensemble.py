"""Per-block local model ensembles.

A block is k-means partitioned; each cluster trains its own one-vs-rest model
on just its members. Prediction routes a point to the nearest cluster center
and asks only that cluster's model. Cluster training tasks are independent
(seeded per cluster index), so thread-parallel and sequential runs produce
identical models.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .linear import OvrModel, SgdParams, ovr_predict_batch, ovr_train
from .partition import ClusterSlice, assign_to_centers, partition_block
from .seeding import child_seed, kmeans_seed


@dataclass(frozen=True)
class LocalModel:
    """One cluster's expert: its center, its planes, and how many points it saw."""

    center: np.ndarray  # (n,) float32
    model: OvrModel
    train_count: int


@dataclass(frozen=True)
class KSgdModel:
    """All local models of one block, ordered by cluster id."""

    local_models: tuple[LocalModel, ...]
    k_requested: int
    params: SgdParams

    def __post_init__(self) -> None:
        if len(self.local_models) == 0:
            raise ValueError("a block model needs at least one local model")

    @property
    def n_dims(self) -> int:
        return int(self.local_models[0].center.shape[0])

    @property
    def k(self) -> int:
        return len(self.local_models)

    @property
    def centers(self) -> np.ndarray:
        return np.stack([lm.center for lm in self.local_models])


def ksgd_train(
    features,
    labels,
    k: int,
    params: SgdParams,
    workers: int = 1,
    kmeans_mode: str = "lloyd",
    kmeans_iters: int = 100,
    batch_size: int = 1024,
) -> KSgdModel:
    """Partition a block into k clusters and train one local model per cluster.

    Partitioning is seeded by kmeans_seed(params.seed); cluster i trains with
    seed child_seed(params.seed, i). With k=1 this reduces exactly to a single
    ovr_train over the whole block (one all-points cluster, seed chain intact).
    """
    feats = np.ascontiguousarray(features, dtype=np.float32)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("features must be a non-empty 2-D array")
    if feats.shape[0] < k:
        raise ValueError(f"block of {feats.shape[0]} points cannot make {k} clusters")
    _, slices = partition_block(
        feats,
        labels,
        k,
        seed=kmeans_seed(params.seed),
        mode=kmeans_mode,
        max_iters=kmeans_iters,
        batch_size=batch_size,
    )

    def train_slice(item: tuple[int, ClusterSlice]) -> LocalModel:
        i, sl = item
        p = replace(params, seed=child_seed(params.seed, i))
        # with a single cluster the class loop is the only parallelism left
        inner = workers if len(slices) == 1 else 1
        model = ovr_train(sl.features, sl.labels, p, workers=inner)
        return LocalModel(sl.center, model, int(sl.labels.size))

    if workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            local_models = tuple(pool.map(train_slice, enumerate(slices)))
    else:
        local_models = tuple(train_slice(item) for item in enumerate(slices))
    return KSgdModel(local_models, k, params)


def ksgd_predict_batch(model: KSgdModel, features) -> np.ndarray:
    """Route each row to its nearest center's local model; returns class ids."""
    feats = np.asarray(features)
    if feats.ndim != 2:
        raise ValueError("features must be a 2-D array")
    if feats.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: model has {model.n_dims} dims, data has {feats.shape[1]}")
    out = np.empty(feats.shape[0], dtype=np.int64)
    if feats.shape[0] == 0:
        return out
    route = assign_to_centers(feats, model.centers)
    for ci, lm in enumerate(model.local_models):
        idx = np.flatnonzero(route == ci)
        if idx.size:
            out[idx] = ovr_predict_batch(lm.model, feats[idx])
    return out


def ksgd_predict(model: KSgdModel, x) -> int:
    """Predicted class id for one point."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D array")
    return int(ksgd_predict_batch(model, x[np.newaxis, :])[0])
