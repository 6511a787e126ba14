from __future__ import annotations

import argparse
import sys
from pathlib import Path

from pydantic import ValidationError

from ..config import ConfigurationError, RunConfig, build_run_config, settings
from ..models import ColorConversion, DatasetManifest, ScaleRule
from ..services.dataset import load_manifest
from ..services.pipeline import stage
from ..services.report import write_report

# flag, RunConfig key, argparse type, help
_RUN_FLAGS: list[tuple[str, str, type, str]] = [
    ("--gamma", "gamma", str, "RBF kernel parameter, or 'auto' to estimate it from the data"),
    ("--lambda", "lam", float, "l2 regularisation weight (default 1e-4)"),
    ("--mtilde", "m_tilde", int, "number of random Fourier features (default 5000)"),
    ("--scales", "scales", str, "comma-separated image scales, e.g. 1,2,4 (default 1)"),
    ("--sample-frac", "sample_frac", float, "fraction of labelled pixels drawn for training (default 0.02)"),
    ("--epochs", "epochs", int, "SGD epochs (default 5)"),
    ("--seed", "seed", int, "seed for pixel sampling, SGD order and data splits (default 0)"),
    ("--rff-seed", "rff_seed", int, "seed of the random feature projection (default 0)"),
    ("--t0", "t0", str, "learning-rate offset, or 'auto' to calibrate it"),
    ("--levels", "J", int, "wavelet scales J per transform (default 4)"),
    ("--depth", "depth", int, "feature tree depth, 1 or 2 (default 2)"),
    ("--pool-factor", "pool_factor", int, "subsampling between tree layers (default 2)"),
    ("--scale-rule", "scale_rule", str, "second-layer scales: " + " | ".join(r.value for r in ScaleRule)),
    ("--color", "color", str, "colour conversion: " + " | ".join(c.value for c in ColorConversion)),
    ("--boundary-radius", "boundary_radius", float, "evaluation band around class boundaries in pixels (default 3)"),
    ("--classes", "class_count", int, "class count when the manifest has no '# classes:' line"),
]


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def add_run_config_args(parser: argparse.ArgumentParser, only: set[str] | None = None) -> None:
    group = parser.add_argument_group("run configuration (overrides --config)")
    for flag, key, kind, help_text in _RUN_FLAGS:
        if only is None or key in only:
            group.add_argument(flag, dest=key, type=kind, default=None, help=help_text)


def run_config_from(args: argparse.Namespace) -> RunConfig:
    overrides = {key: getattr(args, key) for _, key, _, _ in _RUN_FLAGS if hasattr(args, key)}
    try:
        return build_run_config(args.config, overrides)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid run configuration:\n{exc}") from exc
    except (ValueError, OSError) as exc:
        raise ConfigurationError(str(exc)) from exc


def workers_from(args: argparse.Namespace) -> int:
    return args.workers or settings.WORKERS


def open_manifest(path: Path, class_count: int | None) -> DatasetManifest:
    with stage("load"):
        return load_manifest(path, class_count)


def emit(text: str, report_path: Path | None = None) -> None:
    """Results go to stdout, and to a report file when one is requested."""
    sys.stdout.write(text)
    if report_path is not None:
        write_report(text, report_path)
