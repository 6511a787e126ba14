"""End-to-end training and inference, one image at a time.

Each image is loaded, converted, turned into a feature stack and released before the
next one is touched, so memory stays bounded by a single stack.
"""
from __future__ import annotations

import logging
import time
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

import numpy as np
from numpy.typing import NDArray
from tqdm import tqdm

from ..config import RunConfig, settings
from ..models import (
    ColorConversion,
    ColorMode,
    DatasetManifest,
    Image,
    LabelMap,
    ManifestRecord,
    ModelBundle,
    RffProjection,
)
from . import linear_svm, rff
from .dataset import PixelSamples, attach_ndsm, load_example, load_image, rgb_to_yuv, sample_training_pixels
from .feature_extractor import extract_image, feature_matrix, pixel_features
from .metrics import ConfusionMatrix, boundary_exclusion_mask, confusion_matrix
from .model_file import to_storage_precision

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# auto gamma candidates, as multiples of the median-distance estimate
GAMMA_LADDER = (1.0, 2.0, 4.0, 8.0)
GAMMA_HOLDOUT = 0.2


class PipelineError(RuntimeError):
    """A stage failure; the message reads "<stage>: <cause>"."""

    def __init__(self, stage: str, cause: BaseException | str) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")


@contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except PipelineError:
        raise
    except (ValueError, OSError, ArithmeticError, IndexError) as exc:
        raise PipelineError(name, exc) from exc


@dataclass(slots=True)
class TrainingSet:
    features: NDArray[np.float64]
    labels: NDArray[np.intp]
    channels: int

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.labels.shape[0]


@dataclass(slots=True)
class FitResult:
    bundle: ModelBundle
    sample_count: int
    objective: float


@dataclass(slots=True)
class Prediction:
    labels: LabelMap
    scores: NDArray[np.float64]
    seconds: float


@dataclass(slots=True)
class Evaluation:
    matrix: ConfusionMatrix
    images: int


def map_images(func: Callable[[T], R], items: Sequence[T], workers: int = 1, desc: str = "images") -> list[R]:
    """Ordered map over images, on a thread pool when workers > 1."""
    progress = dict(total=len(items), desc=desc, unit="img", disable=len(items) < 2, leave=False)
    if workers <= 1:
        return [func(item) for item in tqdm(items, **progress)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(func, items), **progress))


def prepare_image(image: Image, color: ColorConversion) -> Image:
    """YUV conversion applies to RGB rasters; every other mode passes through."""
    if color is ColorConversion.YUV and image.mode is ColorMode.RGB:
        return rgb_to_yuv(image)
    return image


def load_prediction_input(image_path: str | Path, ndsm_path: str | Path | None = None) -> Image:
    image = load_image(image_path)
    if ndsm_path is not None:
        image = attach_ndsm(image, load_image(ndsm_path).channels[0])
    return image


def collect_training_set(manifest: DatasetManifest, samples: PixelSamples, config: RunConfig) -> TrainingSet:
    """Feature vectors of the sampled pixels, in sample order."""
    extractor = config.extractor_config()
    blocks: list[NDArray[np.float64]] = []
    labels: list[NDArray[np.intp]] = []
    channels: int | None = None
    for index in tqdm(np.unique(samples.image_index).tolist(), desc="features", unit="img", leave=False):
        record = manifest.records[index]
        image, _ = load_example(record, manifest.class_count)
        image = prepare_image(image, config.color)
        if channels is None:
            channels = image.channel_count
        elif image.channel_count != channels:
            raise ValueError(f"{record.image_path} has {image.channel_count} channels, expected {channels}")
        rows, cols, picked = samples.for_image(index)
        blocks.append(pixel_features(extract_image(image, extractor), rows, cols))
        labels.append(picked)
    if channels is None:
        raise ValueError("no training pixels were sampled")
    features = np.concatenate(blocks)
    logger.info("collected %d training vectors of dimension m=%d", features.shape[0], features.shape[1])
    return TrainingSet(features, np.concatenate(labels), channels)


def select_gamma(
    training: TrainingSet, projection: RffProjection, config: RunConfig, class_count: int
) -> float:
    """Pick gamma from multiples of the median-distance estimate by held-out accuracy.

    A seeded fifth of the sampled pixels is held out; every candidate is trained on the
    rest. Ties go to the smaller gamma.
    """
    base = rff.estimate_gamma(training.features, seed=config.seed)
    n = len(training)
    held = round(GAMMA_HOLDOUT * n)
    if held < 1 or n - held < 1:
        logger.info("too few samples to select gamma; using the median-distance estimate %.6g", base)
        return base
    order = np.random.default_rng(config.seed).permutation(n)
    val, rest = np.sort(order[:held]), np.sort(order[held:])
    train_config = config.train_config()

    best_gamma, best_accuracy = base, -1.0
    for factor in GAMMA_LADDER:
        gamma = float(np.float32(base * factor))
        phi = rff.transform_batch(training.features[rest], projection, gamma, settings.CHUNK_PIXELS)
        model = linear_svm.train(phi, training.labels[rest], class_count, train_config)
        predicted = linear_svm.predict_class(model, rff.transform_batch(training.features[val], projection, gamma))
        accuracy = float(np.mean(predicted == training.labels[val]))
        logger.debug("gamma=%.6g (%gx): held-out accuracy %.4f", gamma, factor, accuracy)
        if accuracy > best_accuracy:
            best_gamma, best_accuracy = gamma, accuracy
    logger.info(
        "selected gamma=%.6g (median-distance estimate %.6g), held-out accuracy %.4f on %d pixels",
        best_gamma, base, best_accuracy, held,
    )
    return best_gamma


def resolve_gamma(
    config: RunConfig, training: TrainingSet, projection: RffProjection, class_count: int
) -> float:
    """Configured gamma, or one selected from the data; rounded to the stored f32."""
    if config.gamma is not None:
        return float(np.float32(config.gamma))
    return float(np.float32(select_gamma(training, projection, config, class_count)))


def fit(training: TrainingSet, config: RunConfig, class_names: list[str]) -> FitResult:
    with stage("rff"):
        # G and b depend only on the seed and the dimensions
        projection = rff.generate(config.rff_config(1.0), training.feature_dim)
        gamma = resolve_gamma(config, training, projection, len(class_names))
        rff_config = config.rff_config(gamma)
        phi = rff.transform_batch(training.features, projection, gamma, settings.CHUNK_PIXELS)

    def log_epoch(epoch: int, model) -> None:
        if logger.isEnabledFor(logging.DEBUG):
            objective = linear_svm.hinge_objective(model, phi, training.labels, config.lam)
            logger.debug("epoch %d: objective %.6f", epoch, objective)

    with stage("train"):
        model = linear_svm.train(phi, training.labels, len(class_names), config.train_config(), on_epoch=log_epoch)
        model = to_storage_precision(model)
        objective = linear_svm.hinge_objective(model, phi, training.labels, config.lam)
    logger.info("trained %d classes on %d samples, objective %.6f", len(class_names), len(training), objective)

    bundle = ModelBundle(
        extractor=config.extractor_config(),
        channels=training.channels,
        color=config.color,
        rff=rff_config,
        feature_dim=training.feature_dim,
        class_names=list(class_names),
        model=model,
        projection=projection,
    )
    return FitResult(bundle, len(training), objective)


def train_model(manifest: DatasetManifest, config: RunConfig) -> FitResult:
    with stage("sample"):
        samples = sample_training_pixels(manifest, config.sample_frac, config.seed)
    with stage("features"):
        training = collect_training_set(manifest, samples, config)
    return fit(training, config, manifest.class_names)


def ensure_projection(bundle: ModelBundle) -> ModelBundle:
    if bundle.projection is None:
        bundle.projection = rff.generate(bundle.rff, bundle.feature_dim)
    return bundle


def predict_image(bundle: ModelBundle, image: Image) -> Prediction:
    """Per-pixel class scores and arg-max labels, scored in pixel chunks."""
    started = time.perf_counter()
    prepared = prepare_image(image, bundle.color)
    if prepared.channel_count != bundle.channels:
        raise ValueError(f"image has {prepared.channel_count} channels, the model expects {bundle.channels}")
    projection = ensure_projection(bundle).projection
    stack = extract_image(prepared, bundle.extractor)
    flat = feature_matrix(stack)
    pixels = flat.shape[0]
    scores = np.empty((bundle.class_count, pixels))
    chunk = settings.CHUNK_PIXELS
    for start in range(0, pixels, chunk):
        phi = rff.transform(flat[start : start + chunk], projection, bundle.rff.gamma)
        scores[:, start : start + chunk] = linear_svm.predict_scores(bundle.model, phi).T
    scores = scores.reshape(bundle.class_count, stack.height, stack.width)
    labels = LabelMap(np.argmax(scores, axis=0).astype(np.uint8))
    return Prediction(labels, scores, time.perf_counter() - started)


def evaluate_record(bundle: ModelBundle, record: ManifestRecord, radius: float) -> ConfusionMatrix:
    image, truth = load_example(record, bundle.class_count)
    prediction = predict_image(bundle, image)
    mask = boundary_exclusion_mask(truth, radius) if radius > 0 else None
    return confusion_matrix(prediction.labels, truth, mask, bundle.class_count)


def evaluate_manifest(
    bundle: ModelBundle, manifest: DatasetManifest, radius: float, workers: int = 1
) -> Evaluation:
    if manifest.class_count != bundle.class_count:
        raise PipelineError(
            "evaluate", f"manifest has {manifest.class_count} classes, the model {bundle.class_count}"
        )
    ensure_projection(bundle)
    with stage("evaluate"):
        matrices = map_images(lambda r: evaluate_record(bundle, r, radius), manifest.records, workers, "evaluate")
    total = sum(matrices, ConfusionMatrix.empty(bundle.class_count))
    logger.info("evaluated %d pixels over %d images", total.total, len(matrices))
    return Evaluation(total, len(matrices))
