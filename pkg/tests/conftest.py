from __future__ import annotations

import numpy as np
import pytest

from app.config import RunConfig
from app.models import DatasetManifest
from app.services.synth import synth_texture_dataset


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory: pytest.TempPathFactory) -> DatasetManifest:
    """Six 32x32 three-class texture images with their manifest."""
    return synth_texture_dataset(6, 3, seed=0, out_dir=tmp_path_factory.mktemp("synth"), size=32)


@pytest.fixture
def small_config() -> RunConfig:
    return RunConfig(m_tilde=128, sample_frac=0.05, epochs=3)
