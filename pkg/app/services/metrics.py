"""Confusion-matrix evaluation with an optional boundary-exclusion band."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from ..models import VOID_LABEL, LabelMap


@dataclass(slots=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: NDArray[np.int64]

    @classmethod
    def empty(cls, class_count: int) -> ConfusionMatrix:
        return cls(np.zeros((class_count, class_count), dtype=np.int64))

    @property
    def class_count(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(self.counts + other.counts)


@dataclass(slots=True, frozen=True)
class ClassScore:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(slots=True, frozen=True)
class ClassScores:
    """Per-class scores; None marks a class absent from both truth and prediction."""

    per_class: list[ClassScore | None]
    mean_precision: float | None
    mean_recall: float | None
    mean_f1: float | None


def boundary_exclusion_mask(truth: LabelMap, radius: float) -> NDArray[np.bool_]:
    """Pixels within Euclidean distance `radius` of a pixel carrying another (non-void) label."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    labels = truth.labels
    excluded = np.zeros(labels.shape, dtype=bool)
    if radius == 0:
        return excluded
    valid = labels != VOID_LABEL
    for cls in np.unique(labels[valid]):
        others = valid & (labels != cls)
        if not others.any():
            continue
        distance = ndimage.distance_transform_edt(~others)
        excluded |= (labels == cls) & (distance <= radius)
    return excluded


def confusion_matrix(
    pred: LabelMap, truth: LabelMap, mask: NDArray[np.bool_] | None, class_count: int
) -> ConfusionMatrix:
    """Counts over pixels that are non-void in truth and not excluded by mask."""
    if pred.labels.shape != truth.labels.shape:
        raise ValueError(f"prediction {pred.labels.shape} and truth {truth.labels.shape} differ in size")
    if mask is not None and mask.shape != truth.labels.shape:
        raise ValueError(f"exclusion mask {mask.shape} does not match labels {truth.labels.shape}")
    keep = truth.labels != VOID_LABEL
    if mask is not None:
        keep &= ~mask
    t = truth.labels[keep].astype(np.int64)
    p = pred.labels[keep].astype(np.int64)
    if p.size and p.max() >= class_count:
        raise ValueError(f"predicted label {int(p.max())} outside 0..{class_count - 1}")
    counts = np.bincount(class_count * t + p, minlength=class_count**2).reshape(class_count, class_count)
    return ConfusionMatrix(counts.astype(np.int64))


def pixel_accuracy(cm: ConfusionMatrix) -> float | None:
    """Trace over total; None when nothing was evaluated."""
    if cm.total == 0:
        return None
    return float(np.trace(cm.counts)) / cm.total


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def class_scores(cm: ConfusionMatrix) -> ClassScores:
    counts = cm.counts
    rows, cols = counts.sum(axis=1), counts.sum(axis=0)
    per_class: list[ClassScore | None] = []
    for k in range(cm.class_count):
        if rows[k] == 0 and cols[k] == 0:
            per_class.append(None)
            continue
        hit = float(counts[k, k])
        precision, recall = _ratio(hit, cols[k]), _ratio(hit, rows[k])
        f1 = _ratio(2 * precision * recall, precision + recall)
        per_class.append(ClassScore(precision, recall, f1, int(rows[k])))

    present = [s for s in per_class if s is not None]
    if not present:
        return ClassScores(per_class, None, None, None)
    return ClassScores(
        per_class,
        float(np.mean([s.precision for s in present])),
        float(np.mean([s.recall for s in present])),
        float(np.mean([s.f1 for s in present])),
    )
