# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Main application entry point for Coreason MMHand."""

import argparse
import signal
import sys
from pathlib import Path
from types import FrameType
from typing import NoReturn, Optional, Sequence

from pydantic import ValidationError

from coreason_mmhand.exceptions import MMHandRuntimeError, MMHandValidationError
from coreason_mmhand.service import Service
from coreason_mmhand.utils.logger import command_logger, logger

EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4
ERROR_PREFIX = "mmhand-error:"


def fail(code: int, error: BaseException) -> NoReturn:
    """Print the single-line error record on stderr and exit with `code`."""
    message = " ".join(str(error).split())
    print(f"{ERROR_PREFIX} {code} {type(error).__name__}: {message}", file=sys.stderr)
    sys.exit(code)


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors follow the single-line error format."""

    def error(self, message: str) -> NoReturn:
        fail(EXIT_USAGE, argparse.ArgumentError(None, message))


def _shutdown_handler(signum: int, frame: Optional[FrameType]) -> None:
    """Signal handler to trigger graceful shutdown.

    Raises KeyboardInterrupt which is caught by the main loop.
    """
    logger.info(f"Signal {signum} received. Stopping...")
    raise KeyboardInterrupt


def build_parser() -> CliParser:
    parser = CliParser(prog="mmhand", description="Coreason MMHand CLI")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    toy = subparsers.add_parser("make-toy", help="Render a procedural toy hand dataset")
    toy.add_argument("--n", type=int, required=True, help="Number of samples")
    toy.add_argument("--seed", type=int, required=True, help="Random seed")
    toy.add_argument("--out", type=Path, required=True, help="Output directory")
    toy.add_argument("--size", type=int, required=True, help="Image side length in pixels")

    depth = subparsers.add_parser("train-depth", help="Train the depth generator and the pose estimator")
    depth.add_argument("--config", type=Path, required=True, help="Run configuration JSON")
    depth.add_argument("--data", type=Path, required=True, help="Dataset directory")
    depth.add_argument("--out", type=Path, required=True, help="Output directory")

    gan = subparsers.add_parser("train-gan", help="Train the image generator")
    gan.add_argument("--config", type=Path, required=True, help="Run configuration JSON")
    gan.add_argument("--data", type=Path, required=True, help="Dataset directory")
    gan.add_argument("--depth-ckpt", type=Path, required=True, help="Depth generator checkpoint")
    gan.add_argument("--hpm-ckpt", type=Path, required=True, help="Pose estimator checkpoint")
    gan.add_argument("--out", type=Path, required=True, help="Output directory")

    generate = subparsers.add_parser("generate", help="Render a source hand in a target pose")
    generate.add_argument("--ckpt", type=Path, required=True, help="Generator checkpoint")
    generate.add_argument("--source-image", type=Path, required=True, help="Source PNG")
    generate.add_argument("--source-pose", type=Path, required=True, help="Source pose JSON")
    generate.add_argument("--target-pose", type=Path, required=True, help="Target pose JSON")
    generate.add_argument("--out", type=Path, required=True, help="Output PNG")

    augment = subparsers.add_parser("augment", help="Build an augmented training set")
    augment.add_argument("--ckpt", type=Path, required=True, help="Generator checkpoint")
    augment.add_argument("--data", type=Path, required=True, help="Dataset directory")
    augment.add_argument("--fraction", type=float, required=True, help="Retained real fraction in (0, 1]")
    augment.add_argument("--seed", type=int, required=True, help="Split seed")
    augment.add_argument("--out", type=Path, required=True, help="Output directory")

    evaluate = subparsers.add_parser("evaluate", help="Score predictions against ground truth")
    evaluate.add_argument("--pred", type=Path, required=True, help="Prediction dataset directory")
    evaluate.add_argument("--gt", type=Path, required=True, help="Ground-truth dataset directory")
    evaluate.add_argument("--out", type=Path, required=True, help="Metrics JSON path")
    evaluate.add_argument(
        "--classifier",
        default=None,
        help="Add inception scores: \"toy\" trains a classifier on the ground truth, otherwise an ONNX model path",
    )

    stats = subparsers.add_parser("pair-stats", help="Pose-distance statistics of training pairs")
    stats.add_argument("--data", type=Path, required=True, help="Dataset directory")
    stats.add_argument("--n", type=int, required=True, help="Number of pairs")
    stats.add_argument("--seed", type=int, required=True, help="Pairing seed")
    stats.add_argument("--out", type=Path, required=True, help="Output directory")
    stats.add_argument("--ckpt", type=Path, default=None, help="Generator checkpoint for the error scatter")
    stats.add_argument("--hpm-ckpt", type=Path, default=None, help="Pose estimator checkpoint for the error scatter")
    return parser


def dispatch(svc: Service, args: argparse.Namespace) -> None:
    if args.command == "make-toy":
        print(svc.make_toy(args.n, args.seed, args.out, args.size))
    elif args.command == "train-depth":
        for path in svc.train_depth(args.config, args.data, args.out).values():
            print(path)
    elif args.command == "train-gan":
        for path in svc.train_gan(args.config, args.data, args.depth_ckpt, args.hpm_ckpt, args.out).values():
            print(path)
    elif args.command == "generate":
        print(svc.generate(args.ckpt, args.source_image, args.source_pose, args.target_pose, args.out))
    elif args.command == "augment":
        print(svc.augment(args.ckpt, args.data, args.fraction, args.seed, args.out))
    elif args.command == "evaluate":
        svc.evaluate(args.pred, args.gt, args.out, args.classifier)
        print(args.out)
    elif args.command == "pair-stats":
        if (args.ckpt is None) != (args.hpm_ckpt is None):
            raise MMHandValidationError("--ckpt and --hpm-ckpt must be given together")
        svc.pair_stats(args.data, args.n, args.seed, args.out, args.ckpt, args.hpm_ckpt)
        print(args.out)


def _leaf(error: BaseException) -> BaseException:
    while isinstance(error, BaseExceptionGroup) and error.exceptions:
        error = error.exceptions[0]
    return error


def exit_code(error: BaseException) -> int:
    """Exit code of a failure: 3 for invalid inputs, 4 for everything else."""
    if isinstance(error, (MMHandValidationError, ValidationError)):
        return EXIT_VALIDATION
    return EXIT_RUNTIME


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Entry point for the application.

    Parses the command, runs it through the Service facade and maps failures to exit codes
    (2 usage, 3 validation, 4 runtime).
    """
    args = build_parser().parse_args(list(argv) if argv is not None else None)

    signal.signal(signal.SIGINT, _shutdown_handler)
    signal.signal(signal.SIGTERM, _shutdown_handler)

    try:
        with Service() as svc:
            dispatch(svc, args)
        command_logger(args.command).info("Command finished")
    except KeyboardInterrupt as e:
        logger.info("KeyboardInterrupt caught in main.")
        fail(EXIT_RUNTIME, MMHandRuntimeError(f"interrupted {e}".strip()))
    except Exception as e:
        error = _leaf(e)
        code = exit_code(error)
        if code == EXIT_RUNTIME:
            logger.exception(f"Fatal application error: {error}")
        fail(code, error)


if __name__ == "__main__":  # pragma: no cover
    main()
