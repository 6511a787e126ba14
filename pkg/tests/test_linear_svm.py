from __future__ import annotations

import numpy as np
import pytest

from app.models import LinearModel, TrainConfig
from app.services import linear_svm

CENTERS = np.array([[0.0, 6.0], [6.0, 0.0], [-6.0, -6.0]])


def _blobs(seed: int, per_class: int = 100) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(3), per_class)
    features = CENTERS[labels] + rng.normal(0.0, 0.5, size=(labels.size, 2))
    return features, labels


def test_separable_blobs_are_learned():
    features, labels = _blobs(0)
    config = TrainConfig(lam=1e-3, epochs=10, seed=0)
    model = linear_svm.train(features, labels, 3, config)
    accuracy = np.mean(linear_svm.predict_class(model, features) == labels)
    assert accuracy >= 0.99
    zero = LinearModel.zeros(3, 2)
    assert linear_svm.hinge_objective(zero, features, labels, 1e-3) == pytest.approx(1.0)
    assert linear_svm.hinge_objective(model, features, labels, 1e-3) <= 1.0


def test_training_is_deterministic():
    features, labels = _blobs(1)
    config = TrainConfig(lam=1e-2, epochs=2, seed=5)
    a = linear_svm.train(features, labels, 3, config)
    b = linear_svm.train(features, labels, 3, config)
    assert np.array_equal(a.W, b.W) and np.array_equal(a.v, b.v)


def test_epoch_callback_sees_every_epoch():
    features, labels = _blobs(2, per_class=10)
    seen = []
    linear_svm.train(features, labels, 3, TrainConfig(lam=0.1, epochs=4, t0=10.0), on_epoch=lambda e, m: seen.append(e))
    assert seen == [1, 2, 3, 4]


def test_calibrated_t0_comes_from_grid():
    features, labels = _blobs(3)
    t0 = linear_svm.calibrate_t0(features, labels, 3, 1e-3, seed=0)
    assert t0 in linear_svm.T0_GRID


def test_one_vs_rest_targets():
    targets = linear_svm.one_vs_rest_targets(np.array([2, 0]), 3)
    assert targets.tolist() == [[-1.0, -1.0, 1.0], [1.0, -1.0, -1.0]]


def test_ties_resolve_to_lowest_class():
    model = LinearModel.zeros(4, 3)
    assert linear_svm.predict_class(model, np.ones(3)) == 0
    assert linear_svm.predict_class(model, np.ones((2, 3))).tolist() == [0, 0]


def test_scores_are_affine():
    model = LinearModel(np.array([[1.0, 2.0], [0.0, -1.0]]), np.array([0.5, 0.0]))
    assert linear_svm.predict_scores(model, np.array([1.0, 1.0])).tolist() == [3.5, -1.0]


@pytest.mark.parametrize("labels", [np.array([0, 3]), np.array([-1, 0])])
def test_out_of_range_labels_are_rejected(labels):
    with pytest.raises(ValueError, match="class id"):
        linear_svm.train(np.zeros((2, 2)), labels, 3, TrainConfig(lam=0.1))


def test_empty_training_set_is_rejected():
    with pytest.raises(ValueError):
        linear_svm.train(np.zeros((0, 2)), np.zeros(0, dtype=int), 2, TrainConfig(lam=0.1))


def test_dimension_mismatch_is_rejected():
    with pytest.raises(ValueError):
        linear_svm.predict_scores(LinearModel.zeros(2, 3), np.zeros(4))


def test_invalid_train_config():
    with pytest.raises(ValueError):
        TrainConfig(lam=0.0)
    with pytest.raises(ValueError):
        TrainConfig(lam=1.0, epochs=0)


def test_fresh_draws_from_the_blobs_are_classified():
    features, labels = _blobs(0)
    model = linear_svm.train(features, labels, 3, TrainConfig(lam=1e-3, epochs=10, seed=0))
    fresh, truth = _blobs(100)
    assert np.mean(linear_svm.predict_class(model, fresh) == truth) >= 0.95


def test_epoch_objective_does_not_rise():
    rng = np.random.default_rng(7)
    labels = np.repeat(np.arange(3), 60)
    features = 0.3 * CENTERS[labels] + rng.normal(0.0, 1.5, size=(labels.size, 2))
    curves = []
    for seed in range(10):
        objectives: list[float] = []
        linear_svm.train(
            features,
            labels,
            3,
            TrainConfig(lam=1e-2, epochs=5, seed=seed),
            on_epoch=lambda e, m: objectives.append(linear_svm.hinge_objective(m, features, labels, 1e-2)),
        )
        curves.append(objectives)
    mean = np.mean(curves, axis=0)
    assert np.all(mean[1:] <= mean[:-1] * 1.01)


def test_identical_features_give_a_constant_predictor():
    features = np.ones((200, 3))
    labels = np.tile([0, 1], 100)
    model = linear_svm.train(features, labels, 2, TrainConfig(lam=0.1, epochs=5, seed=0))
    predicted = linear_svm.predict_class(model, features)
    assert np.unique(predicted).size == 1
    assert np.mean(predicted == labels) == 0.5
    assert linear_svm.hinge_objective(model, features, labels, 0.1) == pytest.approx(1.0, abs=0.1)


def test_hinge_objective_by_hand():
    model = LinearModel(np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2))
    features = np.array([[2.0, 0.0], [0.0, 0.5], [1.0, 1.0]])
    labels = np.array([0, 1, 1])
    # margins: [2, 0], [0, 0.5], [-1, 1] -> hinge terms [0, 1], [1, 0.5], [2, 0]
    expected = (0 + 1 + 1 + 0.5 + 2 + 0) / 6 + 0.5 * 0.1 * 2.0
    assert linear_svm.hinge_objective(model, features, labels, 0.1) == pytest.approx(expected)


@pytest.mark.parametrize("c", [1e-3, 0.5, 7.0])
def test_positive_scaling_keeps_predicted_classes(rng, c):
    model = LinearModel(rng.standard_normal((4, 6)), rng.standard_normal(4))
    phi = rng.standard_normal((50, 6))
    scaled = LinearModel(c * model.W, c * model.v)
    assert np.array_equal(linear_svm.predict_class(scaled, phi), linear_svm.predict_class(model, phi))
