from __future__ import annotations

import argparse
from pathlib import Path

from ..services.report import render_folds
from ..services.tuning import crossval
from .options import add_run_config_args, emit, open_manifest, positive_int, run_config_from, workers_from


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("crossval", help="k-fold cross-validation over images at fixed gamma and lambda")
    parser.add_argument("--manifest", type=Path, required=True)
    parser.add_argument("--folds", type=positive_int, default=5)
    parser.add_argument("--report", type=Path, help="also write the fold table to this file")
    add_run_config_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    manifest = open_manifest(args.manifest, config.class_count)
    results = crossval(manifest, args.folds, config, workers_from(args))
    emit(render_folds(results), args.report)
    return 0
