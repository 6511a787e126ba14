from __future__ import annotations

import logging
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from numpy.typing import NDArray
from PIL import Image as PILImage

from ..models import VOID_LABEL, ColorMode, DatasetManifest, Image, LabelMap, ManifestRecord

logger = logging.getLogger(__name__)

_CHANNEL_MODES = {1: ColorMode.GRAY, 3: ColorMode.RGB, 4: ColorMode.RGBA}
_FULL_SCALE = {np.dtype(np.uint8): 255.0, np.dtype(np.uint16): 65535.0}
_CLASSES_DIRECTIVE = re.compile(r"^#\s*classes\s*:\s*(.+)$", re.IGNORECASE)

# BT.601 full range
_KR, _KG, _KB = 0.299, 0.587, 0.114
_U_GAIN, _V_GAIN = 0.565, 0.713


class ImageLoadError(OSError):
    pass


class LabelValueError(ValueError):
    pass


class ManifestError(ValueError):
    pass


@dataclass(slots=True)
class PixelSamples:
    """Sampled training pixels, sorted by (image, row, column)."""

    image_index: NDArray[np.intp]
    rows: NDArray[np.intp]
    cols: NDArray[np.intp]
    labels: NDArray[np.intp]

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __iter__(self):
        return zip(self.image_index.tolist(), self.rows.tolist(), self.cols.tolist(), self.labels.tolist())

    def for_image(self, index: int) -> tuple[NDArray[np.intp], NDArray[np.intp], NDArray[np.intp]]:
        selected = self.image_index == index
        return self.rows[selected], self.cols[selected], self.labels[selected]


def _open_raster(path: Path) -> PILImage.Image:
    try:
        raster = PILImage.open(path)
        raster.load()
    except (OSError, ValueError) as exc:
        raise ImageLoadError(f"cannot read raster {path}: {exc}") from exc
    return raster


def _read_raster(path: Path) -> NDArray[np.generic]:
    """Decode a raster with its stored bit depth and channel count."""
    try:
        encoded = np.fromfile(path, dtype=np.uint8)
    except OSError as exc:
        raise ImageLoadError(f"cannot read raster {path}: {exc}") from exc
    try:
        raster = cv2.imdecode(encoded, cv2.IMREAD_UNCHANGED) if encoded.size else None
    except cv2.error as exc:
        raise ImageLoadError(f"cannot decode raster {path}: {exc}") from exc
    if raster is None:
        raise ImageLoadError(f"cannot decode raster {path}")
    return raster


def load_image(path: str | Path) -> Image:
    """8- or 16-bit raster with 1, 3 or 4 channels, scaled to [0, 1]."""
    path = Path(path)
    raster = _read_raster(path)
    full_scale = _FULL_SCALE.get(raster.dtype)
    if full_scale is None:
        raise ImageLoadError(f"unsupported sample type {raster.dtype} in {path}")
    if raster.ndim == 2:
        raster = raster[:, :, None]
    channels = raster.shape[2]
    if channels not in _CHANNEL_MODES:
        raise ImageLoadError(f"unsupported channel count {channels} in {path}")
    if channels == 3:
        raster = cv2.cvtColor(raster, cv2.COLOR_BGR2RGB)
    elif channels == 4:
        raster = cv2.cvtColor(raster, cv2.COLOR_BGRA2RGBA)
    values = np.moveaxis(raster.reshape(raster.shape[0], raster.shape[1], channels), -1, 0)
    return Image(np.ascontiguousarray(values, dtype=np.float64) / full_scale, _CHANNEL_MODES[channels])


def save_image(image: Image, path: str | Path) -> None:
    """Write an 8-bit PNG with 1, 3 or 4 channels."""
    values = np.rint(np.clip(image.channels, 0.0, 1.0) * 255.0).astype(np.uint8)
    if image.channel_count == 1:
        raster = PILImage.fromarray(values[0])
    elif image.channel_count in (3, 4):
        raster = PILImage.fromarray(np.ascontiguousarray(np.moveaxis(values, 0, -1)))
    else:
        raise ValueError(f"cannot write a {image.channel_count}-channel PNG")
    raster.save(path, format="PNG")


def rgb_to_yuv(image: Image) -> Image:
    if image.channel_count != 3 or image.mode is not ColorMode.RGB:
        raise ValueError(f"YUV conversion needs a 3-channel RGB image, got {image.channel_count} channels ({image.mode.value})")
    r, g, b = image.channels
    y = _KR * r + _KG * g + _KB * b
    yuv = np.stack([y, (b - y) * _U_GAIN + 0.5, (r - y) * _V_GAIN + 0.5])
    clipped = np.clip(yuv, 0.0, 1.0)
    if not np.array_equal(clipped, yuv):
        logger.warning("clipped %d out-of-range chroma samples", int(np.count_nonzero(clipped != yuv)))
    return Image(clipped, ColorMode.YUV)


def yuv_to_rgb(image: Image) -> Image:
    if image.channel_count != 3 or image.mode is not ColorMode.YUV:
        raise ValueError("RGB conversion needs a 3-channel YUV image")
    y, u, v = image.channels
    r = y + (v - 0.5) / _V_GAIN
    b = y + (u - 0.5) / _U_GAIN
    g = (y - _KR * r - _KB * b) / _KG
    return Image(np.stack([r, g, b]), ColorMode.RGB)


def attach_ndsm(image: Image, ndsm: NDArray[np.floating]) -> Image:
    """Append a min-max normalised height model as an extra channel."""
    height = np.asarray(ndsm, dtype=np.float64)
    if height.shape != (image.height, image.width):
        raise ValueError(f"nDSM of shape {height.shape} does not match a {image.width}x{image.height} image")
    low, high = float(height.min()), float(height.max())
    normalised = (height - low) / (high - low) if high > low else np.zeros_like(height)
    mode = ColorMode.NIR_R_G_NDSM if image.channel_count == 3 else ColorMode.RAW
    return Image(np.concatenate([image.channels, normalised[None]]), mode)


def load_labels(path: str | Path, class_count: int) -> LabelMap:
    path = Path(path)
    raster = _open_raster(path)
    if raster.mode not in ("L", "P"):
        raise ImageLoadError(f"label map {path} must be a single-channel 8-bit PNG, got {raster.mode!r}")
    labels = np.array(raster, dtype=np.uint8)
    invalid = (labels >= class_count) & (labels != VOID_LABEL)
    if invalid.any():
        row, col = (int(i) for i in np.argwhere(invalid)[0])
        raise LabelValueError(
            f"{path}: label {int(labels[row, col])} at pixel (row {row}, col {col}) "
            f"is outside 0..{class_count - 1} and not void ({VOID_LABEL})"
        )
    return LabelMap(labels)


def save_labels(labels: LabelMap, path: str | Path) -> None:
    PILImage.fromarray(np.asarray(labels.labels, dtype=np.uint8)).save(path, format="PNG")


def load_manifest(path: str | Path, class_count: int | None = None) -> DatasetManifest:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc

    names: list[str] = []
    records: list[ManifestRecord] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            directive = _CLASSES_DIRECTIVE.match(line)
            if directive:
                names = [name.strip() for name in directive.group(1).split(",") if name.strip()]
            continue
        parts = [p.strip() for p in raw.rstrip("\n").split("\t") if p.strip()]
        if len(parts) not in (2, 3):
            raise ManifestError(f"{path}:{lineno}: expected '<image>\\t<labels>[\\t<ndsm>]', got {raw!r}")
        resolved = [(path.parent / p) for p in parts]
        for item in resolved:
            if not item.is_file():
                raise ManifestError(f"{path}:{lineno}: file not found: {item}")
        records.append(ManifestRecord(*resolved))

    if names and class_count is not None and len(names) != class_count:
        raise ManifestError(f"{path} declares {len(names)} classes but {class_count} were requested")
    count = len(names) or class_count
    if not count:
        raise ManifestError(f"{path} has no '# classes:' line and no class count was given")
    if not records:
        raise ManifestError(f"{path} lists no images")
    return DatasetManifest(path, records, count, names)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    lines = [f"# classes: {', '.join(manifest.class_names)}"]
    for record in manifest.records:
        columns = [record.image_path, record.label_path]
        if record.ndsm_path is not None:
            columns.append(record.ndsm_path)
        lines.append("\t".join(Path(os.path.relpath(c, path.parent)).as_posix() for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_example(record: ManifestRecord, class_count: int) -> tuple[Image, LabelMap]:
    image = load_image(record.image_path)
    if record.ndsm_path is not None:
        image = attach_ndsm(image, load_image(record.ndsm_path).channels[0])
    labels = load_labels(record.label_path, class_count)
    if (labels.height, labels.width) != (image.height, image.width):
        raise ValueError(
            f"label map {record.label_path} is {labels.width}x{labels.height}, "
            f"image {record.image_path} is {image.width}x{image.height}"
        )
    return image, labels


def sample_training_pixels(manifest: DatasetManifest, fraction: float, seed: int) -> PixelSamples:
    """Uniform sample without replacement over all non-void pixels of the manifest."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"sample fraction must be in (0, 1], got {fraction}")

    counts = np.array(
        [np.count_nonzero(~load_labels(r.label_path, manifest.class_count).void_mask) for r in manifest.records],
        dtype=np.int64,
    )
    eligible = int(counts.sum())
    if eligible == 0:
        raise ValueError("no labelled (non-void) pixels to sample from")
    size = min(eligible, max(1, math.floor(fraction * eligible + 0.5)))
    chosen = np.sort(np.random.default_rng(seed).choice(eligible, size=size, replace=False))

    offsets = np.concatenate([[0], np.cumsum(counts)])
    image_index = np.searchsorted(offsets, chosen, side="right") - 1
    rows, cols, labels = (np.empty(size, dtype=np.intp) for _ in range(3))
    for index in np.unique(image_index):
        label_map = load_labels(manifest.records[index].label_path, manifest.class_count)
        flat = np.flatnonzero(~label_map.void_mask)
        selected = image_index == index
        picked = flat[chosen[selected] - offsets[index]]
        rows[selected], cols[selected] = np.divmod(picked, label_map.width)
        labels[selected] = label_map.labels.ravel()[picked]
    logger.info("sampled %d of %d labelled pixels across %d images", size, eligible, len(manifest))
    return PixelSamples(image_index.astype(np.intp), rows, cols, labels)


def save_score_planes(scores: NDArray[np.floating], class_names: list[str], out_dir: str | Path) -> list[Path]:
    """One 16-bit PNG per class with a shared affine scale, written down in scale.txt.

    score = offset + step * pixel_value
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 3 or scores.shape[0] != len(class_names):
        raise ValueError(f"score array of shape {scores.shape} does not match {len(class_names)} classes")
    low, high = float(scores.min()), float(scores.max())
    step = (high - low) / 65535.0 if high > low else 1.0
    written: list[Path] = []
    for index, name in enumerate(class_names):
        quantised = np.rint((scores[index] - low) / step).astype(np.uint16)
        path = out_dir / f"score_{index:02d}.png"
        PILImage.fromarray(quantised).save(path, format="PNG")
        written.append(path)
    lines = [f"offset: {low!r}", f"step: {step!r}", "score = offset + step * pixel_value"]
    lines += [f"score_{index:02d}.png: {name}" for index, name in enumerate(class_names)]
    (out_dir / "scale.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return written
