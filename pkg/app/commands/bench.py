from __future__ import annotations

import argparse
import time

import numpy as np

from ..config import settings
from ..models import Image, LinearModel, RffConfig
from ..services import linear_svm, rff
from ..services.feature_extractor import extract_image, feature_matrix, feature_names
from ..services.haar_swt import configured_op_count, paper_op_count
from ..services.report import render_op_report
from .options import add_run_config_args, positive_int, run_config_from

BENCH_CLASSES = 8


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("bench", help="operation counts and stage timings on a random image")
    parser.add_argument("--width", type=positive_int, default=320)
    parser.add_argument("--height", type=positive_int, default=240)
    parser.add_argument("--channels", type=positive_int, default=3)
    parser.add_argument("--list-features", action="store_true", help="also print the name of every feature plane")
    add_run_config_args(parser, only={"J", "depth", "pool_factor", "scales", "scale_rule", "m_tilde", "gamma", "seed", "rff_seed"})
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    extractor = config.extractor_config()
    width, height, channels = args.width, args.height, args.channels

    print(render_op_report("paper_op_count", paper_op_count(width, height, extractor.J, extractor.R, channels)))
    print(render_op_report("configured_op_count", configured_op_count(width, height, extractor, channels)))

    rng = np.random.default_rng(config.seed)
    image = Image(rng.random((channels, height, width)))
    started = time.perf_counter()
    stack = extract_image(image, extractor)
    extract_seconds = time.perf_counter() - started

    gamma = config.gamma or 1.0
    projection = rff.generate(RffConfig(config.m_tilde, gamma, config.rff_seed), len(stack))
    classes = config.class_count or BENCH_CLASSES
    model = LinearModel(
        rng.standard_normal((classes, config.m_tilde)).astype(np.float32), np.zeros(classes, dtype=np.float32)
    )
    flat = feature_matrix(stack)
    rff_seconds = classify_seconds = 0.0
    for start in range(0, flat.shape[0], settings.CHUNK_PIXELS):
        tick = time.perf_counter()
        phi = rff.transform(flat[start : start + settings.CHUNK_PIXELS], projection, gamma)
        tock = time.perf_counter()
        linear_svm.predict_class(model, phi)
        rff_seconds += tock - tick
        classify_seconds += time.perf_counter() - tock

    print(f"feature_dim: {len(stack)}")
    print(f"time_extract_s: {extract_seconds:.3f}")
    print(f"time_rff_s: {rff_seconds:.3f}")
    print(f"time_classify_s: {classify_seconds:.3f}")
    print(f"time_total_s: {extract_seconds + rff_seconds + classify_seconds:.3f}")
    if args.list_features:
        for index, name in enumerate(feature_names(stack)):
            print(f"feature_{index:04d}: {name}")
    return 0
