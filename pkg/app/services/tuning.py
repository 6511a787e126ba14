"""Model selection over whole images: (gamma, lambda) grid search, k-fold
cross-validation and accuracy against the number of training images."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..config import RunConfig, settings
from ..models import DatasetManifest
from . import linear_svm, rff
from .dataset import sample_training_pixels
from .metrics import ClassScores, class_scores, pixel_accuracy
from .model_file import to_storage_precision
from .pipeline import PipelineError, collect_training_set, evaluate_manifest, stage, train_model

logger = logging.getLogger(__name__)

DEFAULT_VAL_FRACTION = 0.25


@dataclass(slots=True, frozen=True)
class GridPoint:
    gamma: float
    lam: float
    accuracy: float
    pixels: int


@dataclass(slots=True)
class TuneResult:
    table: list[GridPoint]
    best: GridPoint
    splits: int


@dataclass(slots=True, frozen=True)
class FoldResult:
    fold: int
    train_images: int
    test_images: int
    pixels: int
    accuracy: float | None
    scores: ClassScores


@dataclass(slots=True)
class CurvePoint:
    train_images: int
    accuracies: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))


def kfold_splits(n_images: int, folds: int, seed: int) -> list[tuple[list[int], list[int]]]:
    """(train, test) image indices per fold over a seeded permutation."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if folds > n_images:
        raise ValueError(f"{folds} folds need at least {folds} images, the manifest lists {n_images}")
    parts = np.array_split(np.random.default_rng(seed).permutation(n_images), folds)
    splits = []
    for k, test in enumerate(parts):
        train = np.concatenate([p for i, p in enumerate(parts) if i != k])
        splits.append((sorted(train.tolist()), sorted(test.tolist())))
    return splits


def _permuted_split(n_images: int, test_fraction: float, seed: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction must be in (0, 1), got {test_fraction}")
    if n_images < 2:
        raise ValueError(f"a train/test split needs at least 2 images, got {n_images}")
    n_test = min(n_images - 1, max(1, round(test_fraction * n_images)))
    order = np.random.default_rng(seed).permutation(n_images)
    return order[n_test:], order[:n_test]


def holdout_split(n_images: int, test_fraction: float, seed: int) -> tuple[list[int], list[int]]:
    train, test = _permuted_split(n_images, test_fraction, seed)
    return sorted(train.tolist()), sorted(test.tolist())


def tune(
    manifest: DatasetManifest,
    gammas: list[float],
    lambdas: list[float],
    config: RunConfig,
    folds: int | None = None,
    holdout: float = 0.2,
    val_frac: float = DEFAULT_VAL_FRACTION,
) -> TuneResult:
    """Validation pixel accuracy at every grid point; ties go to smaller gamma, then smaller lambda."""
    if not gammas or not lambdas:
        raise ValueError("tuning grids must not be empty")
    if any(g <= 0 for g in gammas) or any(lam <= 0 for lam in lambdas):
        raise ValueError("grid values must be positive")
    gammas = sorted(set(gammas))
    lambdas = sorted(set(lambdas))
    if folds is not None:
        splits = kfold_splits(len(manifest), folds, config.seed)
    else:
        splits = [holdout_split(len(manifest), holdout, config.seed)]

    correct = np.zeros((len(gammas), len(lambdas)), dtype=np.int64)
    pixels = 0
    base = config.train_config()
    for number, (train_idx, val_idx) in enumerate(splits, start=1):
        train_part, val_part = manifest.subset(train_idx), manifest.subset(val_idx)
        with stage("sample"):
            samples = sample_training_pixels(train_part, config.sample_frac, config.seed)
            val_samples = sample_training_pixels(val_part, val_frac, config.seed)
        with stage("features"):
            training = collect_training_set(train_part, samples, config)
            validation = collect_training_set(val_part, val_samples, config)
        # G and b depend only on the seed, so one draw serves every gamma.
        projection = rff.generate(config.rff_config(1.0), training.feature_dim)
        pixels += len(validation)
        for gi, gamma in enumerate(gammas):
            gamma = float(np.float32(gamma))
            with stage("rff"):
                phi = rff.transform_batch(training.features, projection, gamma, settings.CHUNK_PIXELS)
                phi_val = rff.transform_batch(validation.features, projection, gamma, settings.CHUNK_PIXELS)
            for li, lam in enumerate(lambdas):
                with stage("train"):
                    model = linear_svm.train(
                        phi, training.labels, manifest.class_count, dataclasses.replace(base, lam=lam)
                    )
                predicted = linear_svm.predict_class(to_storage_precision(model), phi_val)
                correct[gi, li] += int(np.count_nonzero(predicted == validation.labels))
        logger.info("tuning split %d/%d done (%d train, %d validation images)", number, len(splits), len(train_idx), len(val_idx))

    table = [
        GridPoint(gamma, lam, float(correct[gi, li]) / pixels, pixels)
        for gi, gamma in enumerate(gammas)
        for li, lam in enumerate(lambdas)
    ]
    best = table[0]
    for point in table[1:]:
        if point.accuracy > best.accuracy:
            best = point
    logger.info("best grid point gamma=%g lambda=%g accuracy=%.4f", best.gamma, best.lam, best.accuracy)
    return TuneResult(table, best, len(splits))


def crossval(manifest: DatasetManifest, folds: int, config: RunConfig, workers: int = 1) -> list[FoldResult]:
    results: list[FoldResult] = []
    for fold, (train_idx, test_idx) in enumerate(kfold_splits(len(manifest), folds, config.seed), start=1):
        fitted = train_model(manifest.subset(train_idx), config)
        evaluation = evaluate_manifest(fitted.bundle, manifest.subset(test_idx), config.boundary_radius, workers)
        accuracy = pixel_accuracy(evaluation.matrix)
        results.append(
            FoldResult(fold, len(train_idx), len(test_idx), evaluation.matrix.total, accuracy, class_scores(evaluation.matrix))
        )
        logger.info("fold %d/%d: pixel accuracy %s", fold, folds, "n/a" if accuracy is None else f"{accuracy:.4f}")
    return results


def learning_curve(
    manifest: DatasetManifest,
    train_sizes: list[int],
    test_fraction: float,
    splits: int,
    config: RunConfig,
    workers: int = 1,
) -> list[CurvePoint]:
    """Test accuracy per training-set size; each split holds its test images fixed across sizes."""
    sizes = sorted(set(train_sizes))
    if not sizes or sizes[0] < 1:
        raise ValueError(f"training sizes must be positive, got {train_sizes}")
    if splits < 1:
        raise ValueError(f"need at least one split, got {splits}")

    points = [CurvePoint(size, []) for size in sizes]
    for split in range(splits):
        pool, test = _permuted_split(len(manifest), test_fraction, config.seed + split)
        if sizes[-1] > len(pool):
            raise ValueError(f"{sizes[-1]} training images requested, only {len(pool)} remain after the test split")
        test_part = manifest.subset(sorted(test.tolist()))
        for point in points:
            fitted = train_model(manifest.subset(sorted(pool[: point.train_images].tolist())), config)
            evaluation = evaluate_manifest(fitted.bundle, test_part, config.boundary_radius, workers)
            accuracy = pixel_accuracy(evaluation.matrix)
            if accuracy is None:
                raise PipelineError("evaluate", "no test pixels left after void and boundary exclusion")
            point.accuracies.append(accuracy)
            logger.info("split %d, %d training images: accuracy %.4f", split + 1, point.train_images, accuracy)
    return points
