"""
Subcommands of the command-line tool, one module each.

Every module exposes `register(subparsers)`, which adds its parser and binds
`run(args)` as the handler.
"""

import argparse
from typing import Any, Dict, Optional

from app.config import RunConfig, load_run_config


def add_config_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="flat key=value configuration file")


def resolve_config(args: argparse.Namespace, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Defaults < --config file < flags given on the command line."""
    return load_run_config(getattr(args, "config", None), overrides)
