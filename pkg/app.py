"""
Main application entry point for the flexibility hub.
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from rich.logging import RichHandler

from config import config
from flexhub import __version__

logger = logging.getLogger(__name__)


def configure_logging(level: Optional[str] = None):
    logging.basicConfig(
        level=getattr(logging, level or config.app.log_level),
        format='%(name)s - %(message)s',
        datefmt='[%X]',
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with every registered sub-command."""
    from flexhub.plugins import evaluate, simulate, train

    parser = argparse.ArgumentParser(
        prog="flexhub",
        description="Multi-building HVAC flexibility: co-simulation, SAC training and evaluation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", dest="log_level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate.register_handlers(subparsers)
    train.register_handlers(subparsers)
    evaluate.register_handlers(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application function; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    logger.debug(config)
    return args.handler(args)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Application interrupted by user")
        sys.exit(130)
