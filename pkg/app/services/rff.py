"""Random Fourier feature layer approximating an RBF kernel.

phi(F) = sqrt(2 / m~) * cos(gamma * G F + b), with G standard normal and b uniform on
[0, 2*pi). Inner products of phi approximate exp(-gamma^2 * |x - y|^2 / 2). The random
parameters are never stored: they are regenerated from the seed.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from numpy.typing import NDArray

from ..models import RffConfig, RffProjection

logger = logging.getLogger(__name__)

# Identifier written to model files: numpy Generator(PCG64), ziggurat normals.
PRNG_PCG64 = 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generate(config: RffConfig, m: int) -> RffProjection:
    if m < 1:
        raise ValueError(f"input dimension must be >= 1, got {m}")
    rng = make_rng(config.seed)
    G = rng.standard_normal((config.m_tilde, m))
    b = rng.uniform(0.0, 2.0 * math.pi, config.m_tilde)
    return RffProjection(G, b)


def transform(F: NDArray[np.floating], proj: RffProjection, gamma: float) -> NDArray[np.float64]:
    """Random features of one vector (shape (m,)) or of each row of a batch (shape (n, m))."""
    features = np.asarray(F, dtype=np.float64)
    if features.shape[-1] != proj.input_dim:
        raise ValueError(f"feature dimension {features.shape[-1]} does not match projection input {proj.input_dim}")
    scale = math.sqrt(2.0 / proj.output_dim)
    return scale * np.cos(gamma * (features @ proj.G.T) + proj.b)


def transform_batch(
    features: NDArray[np.floating], proj: RffProjection, gamma: float, chunk: int = 4096
) -> NDArray[np.float64]:
    if features.ndim != 2:
        raise ValueError(f"expected an (n, m) feature matrix, got shape {features.shape}")
    out = np.empty((features.shape[0], proj.output_dim))
    for start in range(0, features.shape[0], chunk):
        out[start : start + chunk] = transform(features[start : start + chunk], proj, gamma)
    return out


def kernel(x: NDArray[np.floating], y: NDArray[np.floating], gamma: float) -> float:
    """Kernel approximated by transform (exact, for tests and diagnostics)."""
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-(gamma**2) * float(diff @ diff) / 2.0))


def estimate_gamma(features: NDArray[np.floating], seed: int = 0, max_samples: int = 1000) -> float:
    """1 / median pairwise distance, so the kernel equals exp(-1/2) at the median."""
    rng = make_rng(seed)
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] > max_samples:
        x = x[np.sort(rng.choice(x.shape[0], size=max_samples, replace=False))]
    squared = np.sum(x * x, axis=1)
    d2 = squared[:, None] + squared[None, :] - 2.0 * (x @ x.T)
    upper = np.sqrt(np.maximum(d2[np.triu_indices(x.shape[0], k=1)], 0.0))
    median = float(np.median(upper)) if upper.size else 0.0
    if median <= 0.0:
        logger.warning("all sampled feature vectors coincide; falling back to gamma = 1.0")
        return 1.0
    return 1.0 / median
