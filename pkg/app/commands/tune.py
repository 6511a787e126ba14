from __future__ import annotations

import argparse
from pathlib import Path

from ..services.report import render_tune_table
from ..services.tuning import DEFAULT_VAL_FRACTION, tune
from .options import add_run_config_args, emit, float_list, open_manifest, positive_int, run_config_from


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("tune", help="grid search over gamma and lambda")
    parser.add_argument("--manifest", type=Path, required=True)
    parser.add_argument("--gammas", type=float_list, required=True, help="comma-separated gamma grid")
    parser.add_argument("--lambdas", type=float_list, required=True, help="comma-separated lambda grid")
    split = parser.add_mutually_exclusive_group()
    split.add_argument("--folds", type=positive_int, help="k-fold cross-validation over images")
    split.add_argument("--holdout", type=float, default=0.2, help="validation fraction of images (default 0.2)")
    parser.add_argument(
        "--val-frac",
        type=float,
        default=DEFAULT_VAL_FRACTION,
        help=f"fraction of validation pixels scored (default {DEFAULT_VAL_FRACTION})",
    )
    parser.add_argument("--report", type=Path, help="also write the table to this file")
    add_run_config_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    manifest = open_manifest(args.manifest, config.class_count)
    result = tune(manifest, args.gammas, args.lambdas, config, args.folds, args.holdout, args.val_frac)
    emit(render_tune_table(result), args.report)
    return 0
