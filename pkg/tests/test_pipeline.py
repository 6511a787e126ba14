from __future__ import annotations

import numpy as np
import pytest

from app.config import RunConfig, settings
from app.models import ColorConversion, ColorMode, Image
from app.services import rff
from app.services.dataset import load_example, load_image, sample_training_pixels
from app.services.model_file import deserialize_model, encode_model, serialize_model
from app.services.pipeline import (
    GAMMA_LADDER,
    PipelineError,
    TrainingSet,
    collect_training_set,
    evaluate_manifest,
    map_images,
    predict_image,
    prepare_image,
    resolve_gamma,
    select_gamma,
    stage,
    train_model,
)


@pytest.fixture(scope="module")
def fitted(synth_dataset):
    return train_model(synth_dataset, RunConfig(m_tilde=128, sample_frac=0.05, epochs=3))


def test_training_produces_a_consistent_bundle(fitted, synth_dataset):
    bundle = fitted.bundle
    assert bundle.feature_dim == 309
    assert bundle.channels == 3
    assert bundle.class_count == 3
    assert bundle.class_names == synth_dataset.class_names
    assert bundle.model.W.dtype == np.float32
    assert bundle.rff.gamma == float(np.float32(bundle.rff.gamma))
    assert fitted.sample_count == round(0.05 * 6 * 32 * 32)
    assert np.isfinite(fitted.objective) and fitted.objective >= 0.0


def test_training_is_reproducible(synth_dataset, small_config):
    a = train_model(synth_dataset, small_config).bundle
    b = train_model(synth_dataset, small_config).bundle
    assert encode_model(a) == encode_model(b)


def test_prediction_keeps_image_size(fitted, synth_dataset):
    image = load_image(synth_dataset.records[0].image_path)
    prediction = predict_image(fitted.bundle, image)
    assert prediction.labels.labels.shape == (image.height, image.width)
    assert prediction.scores.shape == (3, image.height, image.width)
    assert prediction.labels.labels.max() < 3
    assert np.array_equal(prediction.labels.labels, np.argmax(prediction.scores, axis=0))


def test_loaded_model_predicts_exactly_like_the_trained_one(fitted, synth_dataset, tmp_path):
    path = tmp_path / "model.wsg"
    serialize_model(fitted.bundle, path)
    loaded = deserialize_model(path)
    image = load_image(synth_dataset.records[1].image_path)
    fresh, restored = predict_image(fitted.bundle, image), predict_image(loaded, image)
    assert np.array_equal(fresh.scores, restored.scores)
    assert np.array_equal(fresh.labels.labels, restored.labels.labels)


def test_chunk_size_does_not_change_scores(fitted, synth_dataset, monkeypatch):
    image = load_image(synth_dataset.records[2].image_path)
    reference = predict_image(fitted.bundle, image).scores
    monkeypatch.setattr(settings, "CHUNK_PIXELS", 100)
    assert np.allclose(predict_image(fitted.bundle, image).scores, reference, atol=1e-9)


def test_evaluation_is_independent_of_worker_count(fitted, synth_dataset):
    single = evaluate_manifest(fitted.bundle, synth_dataset, 3.0, workers=1)
    pooled = evaluate_manifest(fitted.bundle, synth_dataset, 3.0, workers=3)
    assert np.array_equal(single.matrix.counts, pooled.matrix.counts)
    assert single.images == 6


def test_boundary_radius_reduces_evaluated_pixels(fitted, synth_dataset):
    wide = evaluate_manifest(fitted.bundle, synth_dataset, 3.0)
    none = evaluate_manifest(fitted.bundle, synth_dataset, 0.0)
    assert wide.matrix.total <= none.matrix.total
    assert none.matrix.total == 6 * 32 * 32


def test_channel_mismatch_is_rejected(fitted):
    with pytest.raises(ValueError, match="channels"):
        predict_image(fitted.bundle, Image(np.zeros((1, 8, 8)), ColorMode.GRAY))


def test_yuv_conversion_only_touches_rgb(synth_dataset):
    image, _ = load_example(synth_dataset.records[0], 3)
    assert prepare_image(image, ColorConversion.YUV).mode is ColorMode.YUV
    assert prepare_image(image, ColorConversion.RAW) is image
    gray = Image(np.zeros((1, 2, 2)), ColorMode.GRAY)
    assert prepare_image(gray, ColorConversion.YUV) is gray


def test_stage_errors_are_labelled():
    with pytest.raises(PipelineError, match=r"^load: boom$") as info:
        with stage("load"):
            raise ValueError("boom")
    assert info.value.stage == "load"
    assert isinstance(info.value.cause, ValueError)


def test_map_images_keeps_order():
    assert map_images(lambda x: x * x, list(range(7)), workers=3) == [x * x for x in range(7)]


def _training(manifest, config) -> TrainingSet:
    samples = sample_training_pixels(manifest, config.sample_frac, config.seed)
    return collect_training_set(manifest, samples, config)


def test_auto_gamma_comes_from_the_median_ladder(synth_dataset, small_config):
    training = _training(synth_dataset, small_config)
    projection = rff.generate(small_config.rff_config(1.0), training.feature_dim)
    base = rff.estimate_gamma(training.features, seed=small_config.seed)
    gamma = select_gamma(training, projection, small_config, 3)
    assert any(gamma == pytest.approx(base * factor, rel=1e-6) for factor in GAMMA_LADDER)
    assert select_gamma(training, projection, small_config, 3) == gamma


def test_trained_bundle_stores_the_selected_gamma(fitted, synth_dataset, small_config):
    training = _training(synth_dataset, small_config)
    projection = rff.generate(small_config.rff_config(1.0), training.feature_dim)
    assert fitted.bundle.rff.gamma == resolve_gamma(small_config, training, projection, 3)


def test_explicit_gamma_skips_selection():
    training = TrainingSet(np.array([[0.0], [2.0]]), np.array([0, 1]), 1)
    projection = rff.generate(RunConfig(m_tilde=8).rff_config(1.0), 1)
    assert resolve_gamma(RunConfig(m_tilde=8, gamma=0.3), training, projection, 2) == float(np.float32(0.3))


def test_too_few_samples_keep_the_median_estimate():
    training = TrainingSet(np.array([[0.0], [2.0]]), np.array([0, 1]), 1)
    config = RunConfig(m_tilde=8)
    projection = rff.generate(config.rff_config(1.0), 1)
    assert select_gamma(training, projection, config, 2) == pytest.approx(0.5)
