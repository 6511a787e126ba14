import argparse
import logging
import sys
from pathlib import Path

from app.commands import bench, crossval, curve, evaluate, predict, synth, train, tune
from app.commands.options import positive_int
from app.config import ConfigurationError, settings
from app.services.dataset import ManifestError
from app.services.model_file import ModelFormatError
from app.services.pipeline import PipelineError

logger = logging.getLogger("wavseg")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavseg", description="Haar scattering features + random Fourier SVM segmentation")
    parser.add_argument("--config", type=Path, help="plain-text 'key = value' run configuration")
    parser.add_argument("--log-level", default=None, help=f"logging level (default {settings.LOG_LEVEL})")
    parser.add_argument("--workers", type=positive_int, default=None, help=f"threads for predict/eval (default {settings.WORKERS})")
    subparsers = parser.add_subparsers(dest="command", required=True)

    train.register(subparsers)
    tune.register(subparsers)
    predict.register(subparsers)
    evaluate.register(subparsers)
    bench.register(subparsers)
    synth.register(subparsers)
    crossval.register(subparsers)
    curve.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=(args.log_level or settings.LOG_LEVEL).upper(), format=LOG_FORMAT)
    try:
        return args.handler(args)
    except ConfigurationError as exc:
        logger.error("%s", exc)
        return 2
    except (PipelineError, ModelFormatError, ManifestError, OSError, ValueError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
