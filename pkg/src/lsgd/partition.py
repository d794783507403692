"""k-means partitioning and nearest-centroid routing.

Both training-time assignment and prediction-time routing go through the one
assign_to_centers() function, so a point always lands in the cluster whose
model saw it. Centers are fit in float64 (Lloyd's distortion is non-increasing
there), cast to float32 at the end, and the assignment returned to callers is
recomputed against the cast centers.

Ties in distance go to the smallest center index. Clusters that come up empty
are repaired by moving the empty center onto the point of the largest cluster
farthest from it; centers that stay empty after bounded repair rounds are
dropped and the numbering compacted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

_ASSIGN_CHUNK = 8192


@dataclass(frozen=True)
class CentroidSet:
    """Cluster centers, float32, row index == cluster id."""

    centers: np.ndarray  # (k, n) float32

    def __post_init__(self) -> None:
        if self.centers.ndim != 2 or self.centers.shape[0] == 0:
            raise ValueError("centers must be a non-empty 2-D array")

    @property
    def k(self) -> int:
        return int(self.centers.shape[0])

    @property
    def n_dims(self) -> int:
        return int(self.centers.shape[1])


@dataclass(frozen=True)
class Partitioning:
    """Result of one k-means fit over a block."""

    assignments: np.ndarray  # (m,) int64 cluster ids
    cluster_sizes: np.ndarray  # (k,) int64, all positive
    distortion_history: tuple[float, ...]  # float64 trajectory, lloyd only
    n_iters: int
    converged: bool  # lloyd reached an assignment fixpoint (minibatch: ran its schedule)


@dataclass(frozen=True)
class ClusterSlice:
    """One cluster of a partitioned block: its center and the member rows."""

    center: np.ndarray  # (n,) float32
    features: np.ndarray  # (m_i, n) float32
    labels: np.ndarray  # (m_i,) int64


def assign_to_centers(features, centers) -> np.ndarray:
    """Index of the nearest center per row; squared euclidean, float64, ties
    to the smallest index. Chunked so a block never doubles in memory."""
    feats = np.asarray(features)
    cents = np.asarray(centers, dtype=np.float64)
    if feats.ndim != 2 or cents.ndim != 2:
        raise ValueError("features and centers must be 2-D arrays")
    if feats.shape[1] != cents.shape[1]:
        raise ValueError(f"dimension mismatch: data has {feats.shape[1]} dims, centers have {cents.shape[1]}")
    c_sq = np.einsum("ij,ij->i", cents, cents)
    out = np.empty(feats.shape[0], dtype=np.int64)
    for lo in range(0, feats.shape[0], _ASSIGN_CHUNK):
        chunk = feats[lo : lo + _ASSIGN_CHUNK].astype(np.float64, copy=False)
        # ||x||^2 is constant per row, so argmin needs only -2 x.c + ||c||^2
        d = c_sq - 2.0 * (chunk @ cents.T)
        out[lo : lo + _ASSIGN_CHUNK] = np.argmin(d, axis=1)
    return out


def nearest_center(x, centers) -> int:
    """Nearest-center index for one point. Accepts a CentroidSet or an array."""
    cents = centers.centers if isinstance(centers, CentroidSet) else centers
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D array")
    return int(assign_to_centers(x[np.newaxis, :], cents)[0])


def _distortion(feats, centers64, assign) -> float:
    total = 0.0
    for lo in range(0, feats.shape[0], _ASSIGN_CHUNK):
        chunk = feats[lo : lo + _ASSIGN_CHUNK].astype(np.float64, copy=False)
        diff = chunk - centers64[assign[lo : lo + _ASSIGN_CHUNK]]
        total += float(np.einsum("ij,ij->", diff, diff))
    return total


def _cluster_means(feats, assign, k) -> np.ndarray:
    """Per-cluster float64 means, computed chunked. Caller guarantees no
    cluster is empty."""
    n = feats.shape[1]
    sums = np.zeros((k, n), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for lo in range(0, feats.shape[0], _ASSIGN_CHUNK):
        chunk = feats[lo : lo + _ASSIGN_CHUNK].astype(np.float64, copy=False)
        a = assign[lo : lo + _ASSIGN_CHUNK]
        onehot = np.zeros((chunk.shape[0], k), dtype=np.float64)
        onehot[np.arange(chunk.shape[0]), a] = 1.0
        sums += onehot.T @ chunk
        counts += np.bincount(a, minlength=k)
    return sums / counts[:, np.newaxis]


def _kmeanspp_init(feats, k, rng) -> np.ndarray:
    """k-means++ seeding: first center uniform, the rest D^2-weighted."""
    m = feats.shape[0]
    centers = np.empty((k, feats.shape[1]), dtype=np.float64)
    centers[0] = feats[int(rng.integers(m))]
    d2 = _sq_dist_to(feats, centers[0])
    for i in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            idx = int(rng.choice(m, p=d2 / total))
        else:
            idx = int(rng.integers(m))  # all remaining mass on chosen points
        centers[i] = feats[idx]
        np.minimum(d2, _sq_dist_to(feats, centers[i]), out=d2)
    return centers


def _sq_dist_to(feats, center64) -> np.ndarray:
    out = np.empty(feats.shape[0], dtype=np.float64)
    for lo in range(0, feats.shape[0], _ASSIGN_CHUNK):
        diff = feats[lo : lo + _ASSIGN_CHUNK].astype(np.float64, copy=False) - center64
        out[lo : lo + _ASSIGN_CHUNK] = np.einsum("ij,ij->i", diff, diff)
    return out


def _repair_empties(feats, centers64, assign) -> tuple[np.ndarray, np.ndarray]:
    """Move each empty center onto the farthest point (from it) of the largest
    cluster, then reassign; bounded rounds, so pathological duplicate data
    terminates with empties left for the caller to drop."""
    k = centers64.shape[0]
    for _ in range(2 * k):
        sizes = np.bincount(assign, minlength=k)
        empties = np.flatnonzero(sizes == 0)
        if empties.size == 0:
            break
        e = int(empties[0])
        donor = int(np.argmax(sizes))
        members = np.flatnonzero(assign == donor)
        d2 = _sq_dist_to(feats[members], centers64[e])
        centers64 = centers64.copy()
        centers64[e] = feats[members[int(np.argmax(d2))]].astype(np.float64)
        assign = assign_to_centers(feats, centers64)
    return centers64, assign


def _drop_empty(centers32, assign) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sizes = np.bincount(assign, minlength=centers32.shape[0])
    keep = np.flatnonzero(sizes > 0)
    remap = np.full(centers32.shape[0], -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    return centers32[keep], remap[assign], sizes[keep]


@njit(cache=True, nogil=True)
def _minibatch_update(centers, counts, batch, assign):
    # centers float64 (k, n), counts int64 per-center, batch float32.
    # Sequential within the batch: each point nudges its center by 1/count.
    for t in range(batch.shape[0]):
        c = assign[t]
        counts[c] += 1
        lr = 1.0 / counts[c]
        for j in range(centers.shape[1]):
            centers[c, j] += lr * (batch[t, j] - centers[c, j])


def kmeans_fit(
    features,
    k: int,
    seed: int = 0,
    mode: str = "lloyd",
    max_iters: int = 100,
    batch_size: int = 1024,
) -> tuple[CentroidSet, Partitioning]:
    """Fit k centers to the rows of features.

    mode "lloyd" iterates assign/recenter to an assignment fixpoint (or
    max_iters) and records the distortion after each assignment; mode
    "minibatch" streams seeded batches with per-center counts and records no
    history. Either way the returned assignment is one final pass of
    assign_to_centers against the float32 centers, so routing through the
    returned CentroidSet reproduces it exactly.
    """
    feats = np.ascontiguousarray(features, dtype=np.float32)
    if feats.ndim != 2:
        raise ValueError("features must be a 2-D array")
    m = feats.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if m < k:
        raise ValueError(f"cannot make {k} clusters from {m} points")
    if mode not in ("lloyd", "minibatch"):
        raise ValueError(f"unknown k-means mode {mode!r}")
    if max_iters < 1 or batch_size < 1:
        raise ValueError("max_iters and batch_size must be >= 1")

    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(feats, k, rng)
    history: list[float] = []
    iters = 0
    converged = True

    if mode == "lloyd":
        converged = False
        assign = assign_to_centers(feats, centers)
        centers, assign = _repair_empties(feats, centers, assign)
        history.append(_distortion(feats, centers, assign))
        for it in range(max_iters):
            sizes = np.bincount(assign, minlength=k)
            if np.all(sizes > 0):
                centers = _cluster_means(feats, assign, k)
            new_assign = assign_to_centers(feats, centers)
            centers, new_assign = _repair_empties(feats, centers, new_assign)
            history.append(_distortion(feats, centers, new_assign))
            iters = it + 1
            converged = np.array_equal(new_assign, assign)
            assign = new_assign
            if converged:
                break
    else:
        counts = np.zeros(k, dtype=np.int64)
        for it in range(max_iters):
            bidx = rng.integers(0, m, size=min(batch_size, m))
            batch = np.ascontiguousarray(feats[bidx])
            _minibatch_update(centers, counts, batch, assign_to_centers(batch, centers))
            iters = it + 1

    centers32 = centers.astype(np.float32)
    final = assign_to_centers(feats, centers32)
    if np.bincount(final, minlength=k).min() == 0:
        # quantization or minibatch drift emptied a cluster; repair in the
        # cast space (repair targets are data points, exact in float32)
        centers64, final = _repair_empties(feats, centers32.astype(np.float64), final)
        centers32 = centers64.astype(np.float32)
        final = assign_to_centers(feats, centers32)
    centers32, final, sizes = _drop_empty(centers32, final)
    return (
        CentroidSet(centers32),
        Partitioning(final, sizes, tuple(history), iters, converged),
    )


def partition_block(
    features,
    labels,
    k: int,
    seed: int = 0,
    mode: str = "lloyd",
    max_iters: int = 100,
    batch_size: int = 1024,
) -> tuple[CentroidSet, list[ClusterSlice]]:
    """Cluster a labelled block on features alone and slice it by cluster.

    Slices are ordered by cluster id and together cover the block exactly
    once; every slice is non-empty.
    """
    feats = np.ascontiguousarray(features, dtype=np.float32)
    labs = np.asarray(labels, dtype=np.int64)
    if feats.ndim != 2 or labs.shape != (feats.shape[0],):
        raise ValueError("features must be 2-D with one label per row")
    centroids, part = kmeans_fit(feats, k, seed=seed, mode=mode, max_iters=max_iters, batch_size=batch_size)
    slices = []
    for ci in range(centroids.k):
        idx = np.flatnonzero(part.assignments == ci)
        slices.append(ClusterSlice(centroids.centers[ci], feats[idx], labs[idx]))
    return centroids, slices
