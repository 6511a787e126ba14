from __future__ import annotations

import argparse
from pathlib import Path

from ..services.report import render_curve
from ..services.tuning import learning_curve
from .options import add_run_config_args, emit, int_list, open_manifest, positive_int, run_config_from, workers_from


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("curve", help="test accuracy against the number of training images")
    parser.add_argument("--manifest", type=Path, required=True)
    parser.add_argument("--train-sizes", type=int_list, required=True, help="comma-separated image counts")
    parser.add_argument("--test-fraction", type=float, default=0.2)
    parser.add_argument("--splits", type=positive_int, default=3, help="random train/test splits to average")
    parser.add_argument("--report", type=Path, help="also write the curve to this file")
    add_run_config_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    manifest = open_manifest(args.manifest, config.class_count)
    points = learning_curve(manifest, args.train_sizes, args.test_fraction, args.splits, config, workers_from(args))
    emit(render_curve(points), args.report)
    return 0
