from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..models import ColorMode, DatasetManifest, Image, LabelMap, ManifestRecord
from .dataset import save_image, save_labels, write_manifest

logger = logging.getLogger(__name__)


TEXTURES = [
    # pattern, orientation (deg), period (px), mean level, RGB tint
    ("stripes", 0, 8, 0.30, (1.00, 0.95, 0.90)),
    ("stripes", 90, 8, 0.70, (0.90, 1.00, 0.95)),
    ("checker", 45, 6, 0.50, (0.95, 0.90, 1.00)),
    ("stripes", 45, 12, 0.40, (1.00, 1.00, 0.85)),
    ("stripes", 135, 5, 0.60, (0.85, 1.00, 1.00)),
    ("checker", 0, 10, 0.35, (1.00, 0.85, 1.00)),
    ("stripes", 30, 16, 0.55, (0.90, 0.90, 0.90)),
    ("checker", 60, 4, 0.45, (1.00, 0.90, 0.80)),
]

AMPLITUDE = 0.2
NOISE_STD = 0.03
MANIFEST_NAME = "manifest.txt"


def class_names(classes: int) -> list[str]:
    return [f"{pattern}_{angle}deg_{period}px" for pattern, angle, period, _, _ in TEXTURES[:classes]]


def _texture(kind: int, rows: NDArray, cols: NDArray, phase: float) -> NDArray[np.float64]:
    pattern, angle, period, level, _ = TEXTURES[kind]
    theta = math.radians(angle)
    u = cols * math.cos(theta) + rows * math.sin(theta)
    wave = np.sin(2 * math.pi * u / period + phase)
    if pattern == "checker":
        v = -cols * math.sin(theta) + rows * math.cos(theta)
        wave = np.sign(wave * np.sin(2 * math.pi * v / period + phase))
    return level + AMPLITUDE * wave


def _regions(rng: np.random.Generator, size: int, classes: int) -> NDArray[np.uint8]:
    """Voronoi partition into convex polygonal cells, each with a random class."""
    seeds = rng.uniform(0, size, size=(int(rng.integers(3, 7)), 2))
    kinds = rng.integers(0, classes, size=seeds.shape[0])
    rows, cols = np.mgrid[0:size, 0:size]
    distance = (rows[None] - seeds[:, 0, None, None]) ** 2 + (cols[None] - seeds[:, 1, None, None]) ** 2
    return kinds[np.argmin(distance, axis=0)].astype(np.uint8)


def render_image(rng: np.random.Generator, size: int, classes: int) -> tuple[Image, LabelMap]:
    labels = _regions(rng, size, classes)
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    rgb = np.zeros((3, size, size))
    for kind in range(classes):
        region = labels == kind
        if not region.any():
            continue
        texture = _texture(kind, rows, cols, rng.uniform(0, 2 * math.pi))
        tint = np.asarray(TEXTURES[kind][4])[:, None, None]
        rgb = np.where(region[None], texture[None] * tint, rgb)
    rgb += rng.normal(0.0, NOISE_STD, size=rgb.shape)
    return Image(np.clip(rgb, 0.0, 1.0), ColorMode.RGB), LabelMap(labels)


def synth_texture_dataset(n_images: int, classes: int, seed: int, out_dir: str | Path, size: int = 96) -> DatasetManifest:
    if not 2 <= classes <= len(TEXTURES):
        raise ValueError(f"classes must be in 2..{len(TEXTURES)}, got {classes}")
    if n_images < 1 or size < 2:
        raise ValueError(f"need at least one image of size >= 2, got {n_images} images of size {size}")

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    records: list[ManifestRecord] = []
    for index in range(n_images):
        image, labels = render_image(rng, size, classes)
        record = ManifestRecord(out_dir / "images" / f"img_{index:04d}.png", out_dir / "labels" / f"lbl_{index:04d}.png")
        save_image(image, record.image_path)
        save_labels(labels, record.label_path)
        records.append(record)

    manifest = DatasetManifest(out_dir / MANIFEST_NAME, records, classes, class_names(classes))
    write_manifest(manifest, manifest.path)
    logger.info("wrote %d synthetic %dx%d images with %d classes to %s", n_images, size, size, classes, out_dir)
    return manifest
