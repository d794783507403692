"""Hinge-loss linear classification trained by stochastic gradient descent.

The binary solver minimizes

    F(w) = lam/2 * ||w||^2 + (1/m) * sum_i max(0, 1 - y_i <w, x_i>)

by per-point subgradient steps over seeded epoch permutations. Multiclass
models are one-vs-rest: one plane per class, argmax score wins, ties going to
the smallest class id. Weights accumulate in float64 during training and are
stored as float32.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .seeding import class_seed

SCHEDULES = ("constant", "inverse-scaling")


@dataclass(frozen=True)
class SgdParams:
    """Hyperparameters of the SGD solver."""

    lam: float = 1e-4
    eta: float = 0.001
    epochs: int = 50
    seed: int = 42
    schedule: str = "constant"

    def __post_init__(self) -> None:
        if not self.lam >= 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.eta > 0.0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}, expected one of {SCHEDULES}")


def _check_pair(w, x) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.ndim != 1 or x.ndim != 1 or w.shape != x.shape:
        raise ValueError(f"dimension mismatch: w has shape {w.shape}, x has shape {x.shape}")
    return w, x


def hinge_loss(w, x, y: float) -> float:
    """max(0, 1 - y * <w, x>)."""
    w, x = _check_pair(w, x)
    return max(0.0, 1.0 - y * float(w @ x))


def objective(w, features, targets, lam: float) -> float:
    """Regularized empirical risk: lam/2 * ||w||^2 + mean hinge loss."""
    w = np.asarray(w, dtype=np.float64)
    feats = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("features must be a non-empty 2-D array")
    if y.shape != (feats.shape[0],):
        raise ValueError("one target per row required")
    if w.shape != (feats.shape[1],):
        raise ValueError(f"dimension mismatch: w has shape {w.shape}, features have {feats.shape[1]} columns")
    margins = y * (feats @ w)
    return 0.5 * lam * float(w @ w) + float(np.mean(np.maximum(0.0, 1.0 - margins)))


def subgradient(w, x, y: float, lam: float) -> np.ndarray:
    """Per-point subgradient of the objective at w.

    lam*w when the margin is met (y<w,x> >= 1), else lam*w - y*x.
    """
    w, x = _check_pair(w, x)
    if y * float(w @ x) >= 1.0:
        return lam * w
    return lam * w - y * x


@njit(cache=True, nogil=True)
def _sgd_epoch(w, feats, targets, order, eta, lam, inverse, step):
    # w float64, feats float32 (m, n), targets float64 +-1, order int64 permutation.
    # Returns the global step counter after the epoch. Margin test and update
    # both run in float64.
    n = w.shape[0]
    for t in range(order.shape[0]):
        i = order[t]
        if inverse:
            eta_t = eta / (1.0 + lam * eta * step)
        else:
            eta_t = eta
        s = 0.0
        for j in range(n):
            s += w[j] * feats[i, j]
        yi = targets[i]
        if yi * s < 1.0:
            for j in range(n):
                w[j] -= eta_t * (lam * w[j] - yi * feats[i, j])
        else:
            for j in range(n):
                w[j] -= eta_t * lam * w[j]
        step += 1
    return step


def sgd_train_binary(features, targets, params: SgdParams) -> np.ndarray:
    """Train one hinge-loss plane on +-1 targets; returns float64 weights.

    w starts at zero. Each epoch visits every point once in a fresh seeded
    permutation; the step counter for the inverse-scaling schedule runs over
    all epochs.
    """
    feats = np.ascontiguousarray(features, dtype=np.float32)
    if feats.ndim != 2:
        raise ValueError("features must be a 2-D array")
    m = feats.shape[0]
    if m == 0:
        raise ValueError("cannot train on an empty dataset")
    y = np.ascontiguousarray(targets, dtype=np.float64)
    if y.shape != (m,):
        raise ValueError("one target per row required")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("targets must be +1 or -1")

    rng = np.random.default_rng(params.seed)
    w = np.zeros(feats.shape[1], dtype=np.float64)
    inverse = params.schedule == "inverse-scaling"
    step = 0
    for _ in range(params.epochs):
        order = rng.permutation(m)
        step = _sgd_epoch(w, feats, y, order, params.eta, params.lam, inverse, step)
    return w


@dataclass(frozen=True)
class OvrModel:
    """One separating plane per class seen in training.

    class_ids is sorted ascending and planes rows follow it, so an argmax over
    scores breaks ties toward the smallest class id.
    """

    class_ids: np.ndarray  # (p,) int64, ascending
    planes: np.ndarray  # (p, n) float32

    def __post_init__(self) -> None:
        if self.class_ids.ndim != 1 or self.class_ids.size == 0:
            raise ValueError("a model needs at least one class")
        if self.planes.shape != (self.class_ids.size, self.planes.shape[1]):
            raise ValueError("one plane per class required")
        if np.any(np.diff(self.class_ids) <= 0):
            raise ValueError("class_ids must be strictly ascending")

    @property
    def n_dims(self) -> int:
        return int(self.planes.shape[1])

    def plane(self, class_id: int) -> np.ndarray:
        i = int(np.searchsorted(self.class_ids, class_id))
        if i == self.class_ids.size or self.class_ids[i] != class_id:
            raise KeyError(f"class {class_id} not in model")
        return self.planes[i]


def ovr_train(features, labels, params: SgdParams, workers: int = 1) -> OvrModel:
    """Train one-vs-rest planes, one independent seeded run per class.

    Class c trains against targets +1 for label==c and -1 otherwise, with seed
    class_seed(params.seed, c), so the result is independent of worker count
    and scheduling order.
    """
    feats = np.ascontiguousarray(features, dtype=np.float32)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("features must be a non-empty 2-D array")
    labs = np.asarray(labels, dtype=np.int64)
    if labs.shape != (feats.shape[0],):
        raise ValueError("one label per row required")
    if labs.min() < 0:
        raise ValueError("labels must be non-negative")
    classes = np.unique(labs)

    def train_one(c: np.int64) -> np.ndarray:
        targets = np.where(labs == c, 1.0, -1.0)
        p = replace(params, seed=class_seed(params.seed, int(c)))
        return sgd_train_binary(feats, targets, p)

    if workers > 1 and classes.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            planes = list(pool.map(train_one, classes))
    else:
        planes = [train_one(c) for c in classes]
    return OvrModel(classes, np.asarray(planes, dtype=np.float32))


def ovr_predict_batch(model: OvrModel, features) -> np.ndarray:
    """Predicted class id per row (argmax of plane scores, float64 accumulation)."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError("features must be a 2-D array")
    if feats.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: model has {model.n_dims} dims, data has {feats.shape[1]}")
    scores = feats @ model.planes.astype(np.float64).T
    return model.class_ids[np.argmax(scores, axis=1)]


def ovr_predict(model: OvrModel, x) -> int:
    """Predicted class id for a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D array")
    return int(ovr_predict_batch(model, x[np.newaxis, :])[0])
