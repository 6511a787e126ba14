"""Full-size runs at the default configuration."""
from __future__ import annotations

import numpy as np
import pytest

from app.config import RunConfig
from app.models import ColorConversion, ExtractorConfig, LinearModel, ModelBundle, RffConfig
from app.services.metrics import pixel_accuracy
from app.services.model_file import encode_model, payload_size
from app.services.pipeline import evaluate_manifest, train_model
from app.services.synth import synth_texture_dataset


def test_eight_class_model_fits_in_350_kb():
    bundle = ModelBundle(
        extractor=ExtractorConfig(),
        channels=3,
        color=ColorConversion.YUV,
        rff=RffConfig(m_tilde=5000, gamma=1.0, seed=0),
        feature_dim=309,
        class_names=[f"class_{k}" for k in range(8)],
        model=LinearModel.zeros(8, 5000),
    )
    data = encode_model(bundle)
    assert payload_size(8, 5000) == 4 * 8 * 5001
    assert payload_size(8, 5000) < len(data) < 350_000


@pytest.mark.slow
def test_synthetic_textures_are_segmented(tmp_path):
    manifest = synth_texture_dataset(25, 3, seed=0, out_dir=tmp_path, size=96)
    train, test = manifest.subset(list(range(20))), manifest.subset(list(range(20, 25)))
    config = RunConfig()
    fitted = train_model(train, config)
    evaluation = evaluate_manifest(fitted.bundle, test, config.boundary_radius)
    accuracy = pixel_accuracy(evaluation.matrix)
    majority = evaluation.matrix.counts.sum(axis=1).max() / evaluation.matrix.total
    assert accuracy >= 0.90
    # error at most a third of the majority-class baseline error
    assert 1.0 - accuracy <= (1.0 - majority) / 3
    assert np.isfinite(fitted.objective)
