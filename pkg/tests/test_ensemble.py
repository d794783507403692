import numpy as np
import pytest

from lsgd import (
    SgdParams,
    ksgd_predict,
    ksgd_predict_batch,
    ksgd_train,
    ovr_predict,
    ovr_predict_batch,
    ovr_train,
)
from lsgd.seeding import child_seed


def blob_block(seed=0, classes=4, ppc=30, dims=3, spread=25.0):
    rng = np.random.default_rng(seed)
    means = spread * (np.eye(classes, dims) + 1.0)
    feats = np.vstack([rng.normal(m, 1.0, (ppc, dims)) for m in means]).astype(np.float32)
    labels = np.repeat(np.arange(classes), ppc)
    order = rng.permutation(labels.size)
    return feats[order], labels[order]


def test_k1_reduces_to_global_ovr():
    feats, labels = blob_block()
    params = SgdParams(epochs=3, seed=21)
    km = ksgd_train(feats, labels, 1, params)
    assert km.k == 1
    direct = ovr_train(feats, labels, SgdParams(epochs=3, seed=child_seed(21, 0)))
    lm = km.local_models[0]
    assert lm.model.planes.tobytes() == direct.planes.tobytes()
    assert np.array_equal(lm.model.class_ids, direct.class_ids)
    assert lm.train_count == labels.size
    pts = np.random.default_rng(1).normal(20, 15, (50, 3))
    np.testing.assert_array_equal(ksgd_predict_batch(km, pts), ovr_predict_batch(direct, pts))


def test_k3_pure_blobs_single_class_locals():
    rng = np.random.default_rng(2)
    means = np.array([[50.0, 0.0], [0.0, 50.0], [50.0, 50.0]])
    feats = np.vstack([rng.normal(m, 1.0, (20, 2)) for m in means]).astype(np.float32)
    labels = np.repeat(np.arange(3), 20)
    km = ksgd_train(feats, labels, 3, SgdParams(epochs=2, seed=5))
    assert km.k == 3
    assert sorted(lm.model.class_ids.tolist() for lm in km.local_models) == [[0], [1], [2]]
    assert all(lm.train_count == 20 for lm in km.local_models)


def test_worker_count_does_not_change_model():
    feats, labels = blob_block(seed=3)
    params = SgdParams(epochs=3, seed=17)
    a = ksgd_train(feats, labels, 3, params, workers=1)
    b = ksgd_train(feats, labels, 3, params, workers=4)
    assert len(a.local_models) == len(b.local_models)
    for la, lb in zip(a.local_models, b.local_models):
        assert la.center.tobytes() == lb.center.tobytes()
        assert la.model.planes.tobytes() == lb.model.planes.tobytes()
        assert np.array_equal(la.model.class_ids, lb.model.class_ids)


def test_predict_matches_routing_oracle():
    feats, labels = blob_block(seed=4, classes=5, ppc=40, dims=4)
    km = ksgd_train(feats, labels, 4, SgdParams(epochs=3, seed=9))
    rng = np.random.default_rng(5)
    pts = rng.normal(25, 20, (200, 4))
    centers = km.centers.astype(np.float64)
    for x in pts:
        d = np.sum((centers - x) ** 2, axis=1)
        local = km.local_models[int(np.argmin(d))]
        assert ksgd_predict(km, x) == ovr_predict(local.model, x)


def test_single_local_model_equals_its_ovr():
    feats, labels = blob_block(seed=6, classes=2, ppc=15, dims=2)
    km = ksgd_train(feats, labels, 1, SgdParams(epochs=2, seed=30))
    pts = np.random.default_rng(7).normal(0, 30, (40, 2))
    for x in pts:
        assert ksgd_predict(km, x) == ovr_predict(km.local_models[0].model, x)


def test_point_at_centroid_of_single_class_cluster():
    rng = np.random.default_rng(8)
    a = rng.normal([0.0, 0.0], 0.5, (25, 2))
    b = rng.normal([60.0, 60.0], 0.5, (25, 2))
    feats = np.vstack([a, b]).astype(np.float32)
    labels = np.array([3] * 25 + [8] * 25)
    km = ksgd_train(feats, labels, 2, SgdParams(epochs=2, seed=31))
    for lm in km.local_models:
        assert ksgd_predict(km, lm.center) == lm.model.class_ids[0]


def test_batch_matches_single_and_empty():
    feats, labels = blob_block(seed=9)
    km = ksgd_train(feats, labels, 2, SgdParams(epochs=2, seed=32))
    pts = np.random.default_rng(10).normal(25, 10, (30, 3))
    batch = ksgd_predict_batch(km, pts)
    assert batch.tolist() == [ksgd_predict(km, x) for x in pts]
    assert ksgd_predict_batch(km, np.empty((0, 3))).shape == (0,)
    assert ksgd_predict_batch(km, pts[:1]).tolist() == [ksgd_predict(km, pts[0])]


def test_block_smaller_than_k():
    with pytest.raises(ValueError, match="cannot make"):
        ksgd_train(np.zeros((3, 2), dtype=np.float32), [0, 1, 0], 5, SgdParams())


def test_predict_dim_mismatch():
    feats, labels = blob_block(seed=11)
    km = ksgd_train(feats, labels, 2, SgdParams(epochs=1, seed=1))
    with pytest.raises(ValueError, match="dimension mismatch"):
        ksgd_predict(km, np.zeros(5))
