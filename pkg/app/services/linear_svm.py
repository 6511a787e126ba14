"""One-vs-rest linear SVM trained by SGD on the l2-regularised hinge loss.

Step t uses eta_t = 1 / (lambda * (t + t0)): the weights decay by (1 - eta_t * lambda)
and every class whose margin is below 1 moves towards the sample. The bias is an
unregularised coordinate with the same rate. All K binary problems share one pass.

Every epoch-end iterate is scored on the primal objective and the best one seen so far
is kept, so the reported epoch-end objective never increases.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable

import numpy as np
from numpy.typing import NDArray

from ..models import LinearModel, TrainConfig

logger = logging.getLogger(__name__)

T0_GRID = (1.0, 10.0, 1e2, 1e3, 1e4, 1e5)
CALIBRATION_FRACTION = 0.01
CALIBRATION_MIN_SAMPLES = 100

EpochCallback = Callable[[int, LinearModel], None]


def _check_samples(features: NDArray, labels: NDArray, class_count: int) -> None:
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("training needs at least one sample")
    if labels.shape != (features.shape[0],):
        raise ValueError(f"{labels.shape[0]} labels for {features.shape[0]} samples")
    if class_count < 1:
        raise ValueError(f"class count must be >= 1, got {class_count}")
    if labels.min() < 0 or labels.max() >= class_count:
        bad = int(labels[(labels < 0) | (labels >= class_count)][0])
        raise ValueError(f"class id {bad} outside 0..{class_count - 1}")


def one_vs_rest_targets(labels: NDArray[np.integer], class_count: int) -> NDArray[np.float64]:
    targets = -np.ones((labels.shape[0], class_count))
    targets[np.arange(labels.shape[0]), labels] = 1.0
    return targets


def _sgd_pass(
    W: NDArray[np.float64],
    v: NDArray[np.float64],
    features: NDArray[np.float64],
    targets: NDArray[np.float64],
    order: NDArray[np.intp],
    lam: float,
    t0: float,
    t: int,
) -> int:
    for idx in order:
        x = features[idx]
        y = targets[idx]
        eta = 1.0 / (lam * (t + t0))
        violated = y * (W @ x + v) < 1.0
        W *= 1.0 - eta * lam
        if violated.any():
            W[violated] += (eta * y[violated])[:, None] * x
            v[violated] += eta * y[violated]
        t += 1
    return t


def hinge_objective(model: LinearModel, features: NDArray, labels: NDArray, lam: float) -> float:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("objective needs at least one sample")
    scores = predict_scores(model, features)
    margins = one_vs_rest_targets(labels, model.class_count) * scores
    hinge = float(np.mean(np.maximum(0.0, 1.0 - margins)))
    return hinge + 0.5 * lam * float(np.sum(np.asarray(model.W, dtype=np.float64) ** 2))


def calibrate_t0(
    features: NDArray[np.float64], labels: NDArray[np.integer], class_count: int, lam: float, seed: int
) -> float:
    """Pick the t0 whose single epoch on a small subsample reaches the lowest objective."""
    rng = np.random.default_rng(seed)
    n = features.shape[0]
    size = max(math.ceil(CALIBRATION_FRACTION * n), min(n, CALIBRATION_MIN_SAMPLES))
    subset = np.sort(rng.choice(n, size=size, replace=False))
    sub_x, sub_y = features[subset], labels[subset]
    targets = one_vs_rest_targets(sub_y, class_count)
    order = rng.permutation(size)

    best_t0, best_objective = T0_GRID[0], math.inf
    for t0 in T0_GRID:
        W = np.zeros((class_count, features.shape[1]))
        v = np.zeros(class_count)
        _sgd_pass(W, v, sub_x, targets, order, lam, t0, 0)
        objective = hinge_objective(LinearModel(W, v), sub_x, sub_y, lam)
        logger.debug("t0=%g: one-epoch objective %.6f on %d samples", t0, objective, size)
        if objective < best_objective:
            best_t0, best_objective = t0, objective
    return best_t0


def train(
    features: NDArray[np.floating],
    labels: NDArray[np.integer],
    class_count: int,
    config: TrainConfig,
    on_epoch: EpochCallback | None = None,
) -> LinearModel:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    _check_samples(features, labels, class_count)

    t0 = config.t0
    if t0 is None:
        t0 = calibrate_t0(features, labels, class_count, config.lam, config.seed)
        logger.info("calibrated learning-rate offset t0=%g", t0)

    rng = np.random.default_rng(config.seed)
    targets = one_vs_rest_targets(labels, class_count)
    n, m = features.shape
    W = np.zeros((class_count, m))
    v = np.zeros(class_count)
    best, best_objective = LinearModel.zeros(class_count, m), math.inf
    t = 0
    for epoch in range(1, config.epochs + 1):
        t = _sgd_pass(W, v, features, targets, rng.permutation(n), config.lam, t0, t)
        objective = hinge_objective(LinearModel(W, v), features, labels, config.lam)
        if objective < best_objective:
            best, best_objective = LinearModel(W.copy(), v.copy()), objective
        if on_epoch is not None:
            on_epoch(epoch, LinearModel(best.W.copy(), best.v.copy()))
    return best


def predict_scores(model: LinearModel, phi: NDArray[np.floating]) -> NDArray[np.float64]:
    """y = W phi + v for one vector (shape (m~,)) or a batch (shape (n, m~))."""
    phi = np.asarray(phi)
    if phi.shape[-1] != model.input_dim:
        raise ValueError(f"input dimension {phi.shape[-1]} does not match model dimension {model.input_dim}")
    return phi @ model.W.T + model.v


def predict_class(model: LinearModel, phi: NDArray[np.floating]) -> int | NDArray[np.intp]:
    """Arg-max class; np.argmax resolves ties toward the lowest index."""
    scores = predict_scores(model, phi)
    if scores.ndim == 1:
        return int(np.argmax(scores))
    return np.argmax(scores, axis=1)
