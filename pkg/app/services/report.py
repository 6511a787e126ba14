from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .haar_swt import OpReport
from .metrics import ConfusionMatrix, class_scores, pixel_accuracy
from .pipeline import FitResult
from .tuning import CurvePoint, FoldResult, TuneResult

logger = logging.getLogger(__name__)

MEGA = 1e6


def format_metric(value: float | None) -> str:
    if value is None:
        return "n/a"
    return f"{value:.6f}"


def format_mops(ops: float) -> str:
    return f"{ops / MEGA:.3f}"


def _table(header: list[str], rows: list[list[str]]) -> list[str]:
    widths = [max(len(cell) for cell in column) for column in zip(header, *rows)]
    return ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in [header, *rows]]


def render_eval_report(matrix: ConfusionMatrix, class_names: list[str], radius: float, images: int) -> str:
    scores = class_scores(matrix)
    lines = [
        f"pixel_accuracy: {format_metric(pixel_accuracy(matrix))}",
        f"mean_precision: {format_metric(scores.mean_precision)}",
        f"mean_recall: {format_metric(scores.mean_recall)}",
        f"mean_f1: {format_metric(scores.mean_f1)}",
        f"evaluated_pixels: {matrix.total}",
        f"boundary_radius: {radius:g}",
        f"images: {images}",
        "",
    ]
    rows = []
    for name, score in zip(class_names, scores.per_class):
        if score is None:
            rows.append([name, "0", "n/a", "n/a", "n/a"])
        else:
            rows.append([name, str(score.support), *(format_metric(x) for x in (score.precision, score.recall, score.f1))])
    lines += _table(["class", "support", "precision", "recall", "f1"], rows)
    lines += ["", "confusion_matrix (rows: truth, columns: prediction)"]
    lines += [" ".join(str(int(c)) for c in row) for row in matrix.counts]
    return "\n".join(lines) + "\n"


def render_train_summary(fitted: FitResult, model_bytes: int) -> str:
    bundle = fitted.bundle
    return "\n".join(
        [
            f"feature_dim: {bundle.feature_dim}",
            f"samples: {fitted.sample_count}",
            f"objective: {fitted.objective:.6f}",
            f"gamma: {bundle.rff.gamma:.9g}",
            f"m_tilde: {bundle.rff.m_tilde}",
            f"classes: {bundle.class_count}",
            f"model_bytes: {model_bytes}",
        ]
    ) + "\n"


def render_tune_table(result: TuneResult) -> str:
    rows = [[f"{p.gamma:g}", f"{p.lam:g}", format_metric(p.accuracy), str(p.pixels)] for p in result.table]
    lines = _table(["gamma", "lambda", "accuracy", "pixels"], rows)
    best = result.best
    lines.append(f"best: gamma={best.gamma:g} lambda={best.lam:g} accuracy={format_metric(best.accuracy)}")
    return "\n".join(lines) + "\n"


def render_op_report(label: str, report: OpReport) -> str:
    return (
        f"{label}: {format_mops(report.total_ops)} MOp "
        f"(swt {format_mops(report.swt_additions)}, chi {format_mops(report.chi_additions)}, "
        f"abs {format_mops(report.abs_ops)}, interpolation {format_mops(report.interpolation_ops)})"
    )


def _mean(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def render_folds(results: list[FoldResult]) -> str:
    header = ["fold", "train", "test", "pixels", "pixel_accuracy", "mean_precision", "mean_recall", "mean_f1"]
    rows = [
        [
            str(r.fold),
            str(r.train_images),
            str(r.test_images),
            str(r.pixels),
            format_metric(r.accuracy),
            format_metric(r.scores.mean_precision),
            format_metric(r.scores.mean_recall),
            format_metric(r.scores.mean_f1),
        ]
        for r in results
    ]
    rows.append(
        [
            "mean",
            "",
            "",
            str(sum(r.pixels for r in results)),
            format_metric(_mean([r.accuracy for r in results])),
            format_metric(_mean([r.scores.mean_precision for r in results])),
            format_metric(_mean([r.scores.mean_recall for r in results])),
            format_metric(_mean([r.scores.mean_f1 for r in results])),
        ]
    )
    return "\n".join(_table(header, rows)) + "\n"


def render_curve(points: list[CurvePoint]) -> str:
    rows = [
        [str(p.train_images), format_metric(p.mean), format_metric(p.std), " ".join(f"{a:.4f}" for a in p.accuracies)]
        for p in points
    ]
    return "\n".join(_table(["train_images", "mean_accuracy", "std", "per_split"], rows)) + "\n"


def write_report(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote report %s", path)
    return path
