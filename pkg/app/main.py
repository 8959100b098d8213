"""
Command-line entry point of the subchannel virtual sensor.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from app.commands import bench, evaluate, generate, infer, train, validate
from app.config import LOG_LEVEL_ENV
from app.errors import ConfigError, SensorError, describe_validation_error

logger = logging.getLogger(__name__)

COMMANDS = (generate, train, evaluate, infer, bench, validate)
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mionet-sensor",
        description="Operator-network virtual sensor for PWR subchannel T, v, k fields",
    )
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None,
                        help=f"logging level (default ${LOG_LEVEL_ENV} or INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(level: Optional[str]) -> None:
    """Flag, then the environment (or a local .env), then INFO."""
    load_dotenv()
    level = (level or os.getenv(LOG_LEVEL_ENV) or "INFO").upper()
    if level not in LOG_LEVELS:
        raise ConfigError(f"{LOG_LEVEL_ENV}={level!r} is not one of {', '.join(LOG_LEVELS)}")
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        logger.debug(f"Running {args.command}")
        args.handler(args)
    except SensorError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 1
    except ValidationError as e:
        # inputs rejected by a domain record, e.g. a negative inlet velocity
        print(f"error[{ConfigError.code}]: invalid input: {describe_validation_error(e)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
