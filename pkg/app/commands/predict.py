from __future__ import annotations

import argparse
import logging
from pathlib import Path

from ..models import ManifestRecord, ModelBundle
from ..services.dataset import save_labels, save_score_planes
from ..services.model_file import deserialize_model
from ..services.pipeline import load_prediction_input, map_images, predict_image, stage
from .options import open_manifest, workers_from

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("predict", help="segment one image, or every image of a manifest")
    parser.add_argument("--model", type=Path, required=True)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--image", type=Path, help="image to segment")
    source.add_argument("--manifest", type=Path, help="segment every listed image")
    parser.add_argument("--ndsm", type=Path, help="height raster appended as an extra channel (single image)")
    parser.add_argument(
        "--out", type=Path, required=True, help="label PNG (single image) or output directory (manifest)"
    )
    parser.add_argument("--scores", type=Path, help="directory for per-class 16-bit score PNGs")
    parser.set_defaults(handler=run)


def _segment(
    bundle: ModelBundle, image_path: Path, ndsm_path: Path | None, label_path: Path, score_dir: Path | None
) -> Path:
    with stage("load"):
        image = load_prediction_input(image_path, ndsm_path)
    with stage("predict"):
        prediction = predict_image(bundle, image)
        save_labels(prediction.labels, label_path)
        if score_dir is not None:
            save_score_planes(prediction.scores, bundle.class_names, score_dir)
    logger.info("segmented %s (%dx%d) in %.3f s", image_path, image.width, image.height, prediction.seconds)
    return label_path


def run(args: argparse.Namespace) -> int:
    bundle = deserialize_model(args.model)
    if args.image is not None:
        written = [_segment(bundle, args.image, args.ndsm, args.out, args.scores)]
    else:
        manifest = open_manifest(args.manifest, bundle.class_count)
        args.out.mkdir(parents=True, exist_ok=True)

        def segment(record: ManifestRecord) -> Path:
            stem = record.image_path.stem
            scores = args.scores / stem if args.scores is not None else None
            return _segment(bundle, record.image_path, record.ndsm_path, args.out / f"{stem}_labels.png", scores)

        written = map_images(segment, manifest.records, workers_from(args), "predict")
    for path in written:
        print(path)
    return 0
