from __future__ import annotations

import argparse
import logging
from pathlib import Path

from qctl.config import EXPERIMENT_KINDS, ConfigError, ConfigLoader
from qctl.experiments import EXIT_CONFIG, run

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _workers(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("workers must be at least 1")
    return value


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="qctl",
        description="Robust time-optimal quantum control experiments.",
    )
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for kind in EXPERIMENT_KINDS:
        sub = subparsers.add_parser(kind, help=f"run a {kind} experiment")
        sub.add_argument("--config", type=Path, required=True, help="YAML experiment file")
        sub.add_argument("--seed", type=_seed, help="override the config seed")
        sub.add_argument("--workers", type=_workers, help="scenario worker threads")
        sub.add_argument("--out", type=Path, help="override the output directory")
        sub.add_argument("--log-level", choices=LOG_LEVELS, default="WARNING")
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    """
    Entry point for `qctl <experiment> --config FILE`.

    Exit codes: 0 success, 2 chance constraint not met, 3 invalid config or inputs.
    """
    args = _parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = ConfigLoader.load(args.config, seed=args.seed, workers=args.workers, out=args.out)
        if config.experiment != args.experiment:
            raise ConfigError(
                f"config describes a {config.experiment} experiment, not {args.experiment}",
                "experiment",
            )
        result = run(config)
    except ConfigError as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except ValueError as exc:
        logger.error("run rejected its inputs: %s", exc)
        return EXIT_CONFIG
    logger.info("outputs written to %s", result.directory)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
