from __future__ import annotations

import argparse
from pathlib import Path

from ..services.model_file import deserialize_model
from ..services.pipeline import evaluate_manifest
from ..services.report import render_eval_report
from .options import add_run_config_args, emit, open_manifest, run_config_from, workers_from


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="score a model against labelled images")
    parser.add_argument("--model", type=Path, required=True)
    parser.add_argument("--manifest", type=Path, required=True)
    parser.add_argument("--report", type=Path, help="also write the report to this file")
    add_run_config_args(parser, only={"boundary_radius"})
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    bundle = deserialize_model(args.model)
    manifest = open_manifest(args.manifest, bundle.class_count)
    evaluation = evaluate_manifest(bundle, manifest, config.boundary_radius, workers_from(args))
    report = render_eval_report(evaluation.matrix, bundle.class_names, config.boundary_radius, evaluation.images)
    emit(report, args.report)
    return 0
