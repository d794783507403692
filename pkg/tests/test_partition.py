import numpy as np
import pytest

from lsgd import (
    assign_to_centers,
    kmeans_fit,
    nearest_center,
    partition_block,
)
from lsgd.partition import CentroidSet


def brute_nearest(x, centers):
    d = [float(np.sum((np.asarray(x, np.float64) - np.asarray(c, np.float64)) ** 2)) for c in centers]
    best = min(d)
    return d.index(best)  # first == smallest index on ties


# --- kmeans_fit -------------------------------------------------------------


def test_lloyd_four_point_fixpoint():
    # exhaustive hand solution: cluster the pairs, centers at the pair means
    X = np.array([[0, 0], [0, 1], [10, 0], [10, 1]], dtype=np.float32)
    cs, part = kmeans_fit(X, 2, seed=0)
    rows = cs.centers[np.argsort(cs.centers[:, 0])]
    np.testing.assert_allclose(rows, [[0.0, 0.5], [10.0, 0.5]])
    assert sorted(part.cluster_sizes.tolist()) == [2, 2]
    assert part.converged
    assert part.distortion_history[-1] == pytest.approx(1.0)


def test_k1_center_is_global_mean():
    rng = np.random.default_rng(3)
    X = rng.normal(2.0, 5.0, (200, 6)).astype(np.float32)
    cs, part = kmeans_fit(X, 1, seed=1)
    np.testing.assert_allclose(cs.centers[0], X.astype(np.float64).mean(axis=0), rtol=1e-6)
    assert part.cluster_sizes.tolist() == [200]
    assert np.all(part.assignments == 0)


def test_k_equals_m_zero_distortion():
    rng = np.random.default_rng(4)
    X = rng.normal(0, 10, (12, 3)).astype(np.float32)
    cs, part = kmeans_fit(X, 12, seed=2)
    assert cs.k == 12
    assert part.cluster_sizes.tolist() == [1] * 12
    assert part.distortion_history[-1] == 0.0


def test_lloyd_invariants_random_points():
    rng = np.random.default_rng(5)
    X = rng.uniform(-50, 50, (1000, 2)).astype(np.float32)
    cs, part = kmeans_fit(X, 8, seed=7)
    assert part.converged
    # every point assigned to its nearest center (brute-force scan)
    for i in range(X.shape[0]):
        assert part.assignments[i] == brute_nearest(X[i], cs.centers)
    # every center equals the mean of its assigned points
    for c in range(cs.k):
        members = X[part.assignments == c].astype(np.float64)
        np.testing.assert_allclose(cs.centers[c], members.mean(axis=0), rtol=1e-6)
    # distortion non-increasing
    h = np.array(part.distortion_history)
    assert np.all(np.diff(h) <= 1e-9 * max(1.0, h[0]))


def test_kmeans_deterministic():
    rng = np.random.default_rng(6)
    X = rng.normal(0, 3, (300, 4)).astype(np.float32)
    a = kmeans_fit(X, 5, seed=11)
    b = kmeans_fit(X, 5, seed=11)
    assert a[0].centers.tobytes() == b[0].centers.tobytes()
    assert np.array_equal(a[1].assignments, b[1].assignments)


def test_kmeans_assignments_reproducible_by_routing():
    # the returned assignment is exactly what routing against the float32
    # centers yields; this is the train/predict consistency contract
    rng = np.random.default_rng(7)
    X = rng.normal(0, 3, (500, 8)).astype(np.float32)
    for mode in ("lloyd", "minibatch"):
        cs, part = kmeans_fit(X, 6, seed=13, mode=mode)
        np.testing.assert_array_equal(part.assignments, assign_to_centers(X, cs.centers))
        assert part.cluster_sizes.sum() == 500
        assert part.cluster_sizes.min() >= 1


def test_minibatch_deterministic_and_sane():
    rng = np.random.default_rng(8)
    X = np.vstack(
        [rng.normal([0, 0], 1, (300, 2)), rng.normal([40, 40], 1, (300, 2))]
    ).astype(np.float32)
    a = kmeans_fit(X, 2, seed=3, mode="minibatch")
    b = kmeans_fit(X, 2, seed=3, mode="minibatch")
    assert a[0].centers.tobytes() == b[0].centers.tobytes()
    # two tight faraway blobs: minibatch must find one center in each
    order = np.argsort(a[0].centers[:, 0])
    np.testing.assert_allclose(a[0].centers[order], [[0, 0], [40, 40]], atol=1.0)


def test_duplicate_points_drop_irreparable_clusters():
    # only two distinct locations but k=3: one cluster cannot be filled and
    # is dropped, the rest stay consistent
    X = np.repeat(np.array([[0.0, 0.0], [10.0, 10.0]], dtype=np.float32), 5, axis=0)
    cs, part = kmeans_fit(X, 3, seed=0)
    assert cs.k == 2
    assert sorted(part.cluster_sizes.tolist()) == [5, 5]
    assert part.assignments.max() < cs.k
    np.testing.assert_array_equal(part.assignments, assign_to_centers(X, cs.centers))


def test_kmeans_input_errors():
    X = np.zeros((3, 2), dtype=np.float32)
    with pytest.raises(ValueError):
        kmeans_fit(X, 0, seed=0)
    with pytest.raises(ValueError):
        kmeans_fit(X, 4, seed=0)
    with pytest.raises(ValueError):
        kmeans_fit(X, 2, seed=0, mode="em")


# --- nearest_center ---------------------------------------------------------


def test_nearest_center_basic_and_tie():
    cs = CentroidSet(np.array([[1.0, 0.0], [5.0, 0.0]], dtype=np.float32))
    assert nearest_center([0.0, 0.0], cs) == 0
    tie = CentroidSet(np.array([[1.0, 0.0], [-1.0, 0.0]], dtype=np.float32))
    assert nearest_center([0.0, 0.0], tie) == 0


def test_nearest_center_matches_brute_force():
    rng = np.random.default_rng(9)
    centers = rng.normal(0, 5, (10, 3)).astype(np.float32)
    cs = CentroidSet(centers)
    pts = rng.normal(0, 5, (100, 3))
    for x in pts:
        assert nearest_center(x, cs) == brute_nearest(x, centers)


def test_nearest_center_dim_mismatch():
    cs = CentroidSet(np.zeros((2, 3), dtype=np.float32))
    with pytest.raises(ValueError, match="dimension mismatch"):
        nearest_center([1.0, 2.0], cs)


# --- partition_block --------------------------------------------------------


def test_partition_covers_and_disjoint():
    rng = np.random.default_rng(10)
    X = rng.normal(0, 5, (10, 2)).astype(np.float32)
    y = np.arange(10)  # unique labels let us reconstruct the index partition
    _, slices = partition_block(X, y, 2, seed=1)
    assert len(slices) == 2
    seen = np.concatenate([sl.labels for sl in slices])
    assert sorted(seen.tolist()) == list(range(10))
    assert sum(sl.features.shape[0] for sl in slices) == 10
    assert all(sl.features.shape[0] >= 1 for sl in slices)


def test_partition_separated_blobs_label_pure():
    rng = np.random.default_rng(11)
    a = rng.normal([0, 0], 1, (20, 2))
    b = rng.normal([40, 40], 1, (20, 2))  # 20 sigma apart per axis
    X = np.vstack([a, b]).astype(np.float32)
    y = np.array([0] * 20 + [1] * 20)
    _, slices = partition_block(X, y, 2, seed=2)
    for sl in slices:
        assert np.unique(sl.labels).size == 1


def test_partition_k1_identity():
    rng = np.random.default_rng(12)
    X = rng.normal(0, 5, (15, 3)).astype(np.float32)
    y = rng.integers(0, 4, 15)
    _, slices = partition_block(X, y, 1, seed=3)
    assert len(slices) == 1
    np.testing.assert_array_equal(slices[0].features, X)
    np.testing.assert_array_equal(slices[0].labels, y)


def test_partition_block_too_small():
    with pytest.raises(ValueError):
        partition_block(np.zeros((2, 2), dtype=np.float32), [0, 1], 5, seed=0)
