from __future__ import annotations

import argparse
from pathlib import Path

from ..services.synth import synth_texture_dataset
from .options import positive_int


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("synth", help="write a synthetic oriented-texture dataset")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--images", type=positive_int, default=20)
    parser.add_argument("--classes", type=positive_int, default=3)
    parser.add_argument("--size", type=positive_int, default=96, help="image side length in pixels")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    manifest = synth_texture_dataset(args.images, args.classes, args.seed, args.out, args.size)
    print(manifest.path)
    return 0
