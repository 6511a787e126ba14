from __future__ import annotations

import argparse
import logging
from pathlib import Path

from ..services.model_file import serialize_model
from ..services.pipeline import stage, train_model
from ..services.report import render_train_summary
from .options import add_run_config_args, emit, open_manifest, run_config_from

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="train a segmentation model from a manifest")
    parser.add_argument("--manifest", type=Path, required=True, help="tab-separated image/label list")
    parser.add_argument("--out", type=Path, required=True, help="model file to write")
    add_run_config_args(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    manifest = open_manifest(args.manifest, config.class_count)
    logger.info("training on %d images, %d classes", len(manifest), manifest.class_count)
    fitted = train_model(manifest, config)
    with stage("serialize"):
        size = serialize_model(fitted.bundle, args.out)
    emit(render_train_summary(fitted, size))
    return 0
