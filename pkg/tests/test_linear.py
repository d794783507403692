import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lsgd import (
    OvrModel,
    SgdParams,
    hinge_loss,
    objective,
    ovr_predict,
    ovr_predict_batch,
    ovr_train,
    sgd_train_binary,
    subgradient,
)
from lsgd.seeding import class_seed

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


def vec(n):
    return arrays(np.float64, n, elements=finite)


# --- hinge_loss -------------------------------------------------------------


def test_hinge_margin_met():
    assert hinge_loss([1.0, 0.0], [2.0, 0.0], +1) == 0.0


def test_hinge_zero_weights():
    assert hinge_loss([0.0, 0.0], [3.0, 7.0], -1) == 1.0


def test_hinge_half():
    assert hinge_loss([1.0, 0.0], [0.5, 0.0], +1) == 0.5


def test_hinge_dim_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        hinge_loss([1.0, 0.0], [1.0, 0.0, 0.0], +1)


@given(vec(4), vec(4), vec(4), st.sampled_from([-1, 1]))
def test_hinge_nonneg_and_convex_on_segment(w0, w1, x, y):
    mid = hinge_loss(0.5 * (w0 + w1), x, y)
    ends = 0.5 * (hinge_loss(w0, x, y) + hinge_loss(w1, x, y))
    assert mid >= 0.0
    assert mid <= ends + 1e-12


# --- objective --------------------------------------------------------------


def test_objective_zero_weights_unit_losses():
    val = objective([0.0, 0.0], [[1.0, 2.0], [-3.0, 0.5]], [1, -1], lam=1.0)
    assert val == 1.0


def test_objective_regularizer_only():
    assert objective([2.0, 0.0], [[1.0, 0.0]], [1], lam=1.0) == 2.0


def test_objective_mean_of_losses():
    val = objective([1.0, 0.0], [[0.5, 0.0], [-0.5, 0.0]], [1, -1], lam=0.0)
    assert val == 0.5


def test_objective_empty_data():
    with pytest.raises(ValueError):
        objective([1.0], np.empty((0, 1)), [], lam=1.0)


# --- subgradient ------------------------------------------------------------


def test_subgradient_inside_margin():
    g = subgradient([0.0, 0.0], [1.0, 2.0], +1, lam=1.0)
    np.testing.assert_array_equal(g, [-1.0, -2.0])


def test_subgradient_margin_met():
    g = subgradient([3.0, 0.0], [1.0, 0.0], +1, lam=0.5)
    np.testing.assert_array_equal(g, [1.5, 0.0])


def test_subgradient_dim_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        subgradient([1.0], [1.0, 2.0], +1, lam=0.1)


def _point_objective(w, x, y, lam):
    return 0.5 * lam * float(w @ w) + hinge_loss(w, x, y)


@given(vec(5), vec(5), st.sampled_from([-1, 1]), st.floats(min_value=0.0, max_value=2.0))
@settings(max_examples=150)
def test_subgradient_matches_finite_differences(w, x, y, lam):
    margin = y * float(np.dot(w, x))
    if abs(margin - 1.0) <= 1e-3:
        return  # kink: subdifferential, not a gradient
    g = subgradient(w, x, y, lam)
    h = 1e-6
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        fd = (_point_objective(w + e, x, y, lam) - _point_objective(w - e, x, y, lam)) / (2 * h)
        assert abs(g[j] - fd) <= 1e-5 * max(1.0, abs(fd))


# --- sgd_train_binary -------------------------------------------------------


def test_sgd_single_point_one_step():
    w = sgd_train_binary([[1.0, 0.0]], [1.0], SgdParams(lam=0.0, eta=1.0, epochs=1, seed=123))
    np.testing.assert_array_equal(w, [1.0, 0.0])


def test_sgd_two_step_inverse_schedule_oracle():
    # single point, margin never reached in 2 epochs: replay the update by hand
    # (features pass through float32 storage, so the oracle casts too)
    lam, eta = 0.1, 0.5
    x, y = np.array([0.2, -0.4], dtype=np.float32).astype(np.float64), -1.0
    w = np.zeros(2)
    for t in range(2):
        eta_t = eta / (1.0 + lam * eta * t)
        if y * (w @ x) < 1.0:
            w = w - eta_t * (lam * w - y * x)
        else:
            w = w - eta_t * lam * w
    got = sgd_train_binary([x], [y], SgdParams(lam=lam, eta=eta, epochs=2, seed=9, schedule="inverse-scaling"))
    np.testing.assert_allclose(got, w, rtol=1e-12)


def _two_clusters(seed=0):
    rng = np.random.default_rng(seed)
    pos = rng.normal([+5.0, 0.0], 1.0, (20, 2))
    neg = rng.normal([-5.0, 0.0], 1.0, (20, 2))
    feats = np.vstack([pos, neg]).astype(np.float32)
    targets = np.array([1.0] * 20 + [-1.0] * 20)
    return feats, targets


def test_sgd_separable_clusters_perfect_training_accuracy():
    feats, targets = _two_clusters()
    w = sgd_train_binary(feats, targets, SgdParams(lam=1e-4, eta=0.1, epochs=50, seed=3))
    margins = targets * (feats.astype(np.float64) @ w)
    assert np.all(margins > 0.0)


def test_sgd_objective_descent():
    feats, targets = _two_clusters(seed=1)
    params = SgdParams(lam=1e-4, eta=0.001, epochs=50, seed=4)
    w = sgd_train_binary(feats, targets, params)
    before = objective(np.zeros(2), feats, targets, params.lam)
    after = objective(w, feats, targets, params.lam)
    assert after < before


def test_sgd_deterministic():
    feats, targets = _two_clusters(seed=2)
    params = SgdParams(epochs=5, seed=77)
    w1 = sgd_train_binary(feats, targets, params)
    w2 = sgd_train_binary(feats, targets, params)
    assert w1.tobytes() == w2.tobytes()


def test_sgd_empty_data():
    with pytest.raises(ValueError):
        sgd_train_binary(np.empty((0, 3)), [], SgdParams())


def test_sgd_rejects_nonbinary_targets():
    with pytest.raises(ValueError, match=r"\+1 or -1"):
        sgd_train_binary([[1.0]], [0.5], SgdParams())


# --- SgdParams --------------------------------------------------------------


def test_params_validation():
    SgdParams(lam=0.0)  # degenerate but allowed: pure hinge steps
    with pytest.raises(ValueError):
        SgdParams(lam=-0.1)
    with pytest.raises(ValueError):
        SgdParams(eta=0.0)
    with pytest.raises(ValueError):
        SgdParams(epochs=0)
    with pytest.raises(ValueError):
        SgdParams(seed=-1)
    with pytest.raises(ValueError):
        SgdParams(seed=2**64)
    with pytest.raises(ValueError, match="schedule"):
        SgdParams(schedule="linear")


def test_params_defaults():
    p = SgdParams()
    assert (p.lam, p.eta, p.epochs, p.seed, p.schedule) == (1e-4, 0.001, 50, 42, "constant")


# --- ovr_train / ovr_predict ------------------------------------------------


def _blobs3(seed=0, ppc=100, dims=4):
    # means on distinct axes, all far from the origin (no bias term in the model)
    rng = np.random.default_rng(seed)
    means = 30.0 * np.eye(3, dims)
    feats = np.vstack([rng.normal(m, 1.0, (ppc, dims)) for m in means]).astype(np.float32)
    labels = np.repeat(np.arange(3), ppc)
    return feats, labels


def test_ovr_single_class():
    model = ovr_train([[1.0, 2.0], [3.0, 4.0]], [7, 7], SgdParams(epochs=1))
    assert model.class_ids.tolist() == [7]
    assert model.planes.shape == (1, 2)
    assert ovr_predict(model, [100.0, -100.0]) == 7


def test_ovr_three_classes_sorted():
    feats, labels = _blobs3()
    model = ovr_train(feats, labels[::-1].copy(), SgdParams(epochs=1))
    assert model.class_ids.tolist() == [0, 1, 2]
    assert model.planes.shape == (3, 4)


def test_ovr_blob_training_accuracy():
    feats, labels = _blobs3()
    model = ovr_train(feats, labels, SgdParams(eta=0.01, epochs=20, seed=5))
    preds = ovr_predict_batch(model, feats)
    assert np.mean(preds == labels) >= 0.99


def test_ovr_per_class_seed_derivation():
    feats, labels = _blobs3(ppc=30)
    params = SgdParams(epochs=3, seed=11)
    model = ovr_train(feats, labels, params)
    for c in (0, 1, 2):
        targets = np.where(labels == c, 1.0, -1.0)
        direct = sgd_train_binary(feats, targets, SgdParams(epochs=3, seed=class_seed(11, c)))
        np.testing.assert_array_equal(model.plane(c), direct.astype(np.float32))


def test_ovr_worker_count_irrelevant():
    feats, labels = _blobs3(ppc=40)
    params = SgdParams(epochs=3, seed=13)
    m1 = ovr_train(feats, labels, params, workers=1)
    m4 = ovr_train(feats, labels, params, workers=4)
    assert m1.planes.tobytes() == m4.planes.tobytes()
    assert np.array_equal(m1.class_ids, m4.class_ids)


def test_ovr_predict_argmax_and_ties():
    model = OvrModel(np.array([0, 1]), np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.float32))
    assert ovr_predict(model, [2.0, 1.0]) == 0
    tie = OvrModel(np.array([0, 1]), np.array([[1.0, 0.0], [1.0, 0.0]], dtype=np.float32))
    assert ovr_predict(tie, [1.0, 0.0]) == 0


def test_ovr_predict_scaling_invariance():
    feats, labels = _blobs3(ppc=20)
    model = ovr_train(feats, labels, SgdParams(epochs=2, seed=6))
    scaled = OvrModel(model.class_ids, (model.planes * 7.5).astype(np.float32))
    pts = np.random.default_rng(0).normal(0, 10, (50, 4))
    np.testing.assert_array_equal(ovr_predict_batch(model, pts), ovr_predict_batch(scaled, pts))


def test_ovr_predict_dim_mismatch():
    model = ovr_train([[1.0, 2.0]], [0], SgdParams(epochs=1))
    with pytest.raises(ValueError, match="dimension mismatch"):
        ovr_predict(model, [1.0, 2.0, 3.0])


def test_ovr_batch_matches_single():
    feats, labels = _blobs3(ppc=15)
    model = ovr_train(feats, labels, SgdParams(epochs=2, seed=8))
    pts = np.random.default_rng(1).normal(5, 10, (25, 4))
    batch = ovr_predict_batch(model, pts)
    singles = [ovr_predict(model, p) for p in pts]
    assert batch.tolist() == singles


def test_ovr_empty_data():
    with pytest.raises(ValueError):
        ovr_train(np.empty((0, 2)), [], SgdParams())
