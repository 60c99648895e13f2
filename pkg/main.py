"""
Main entry point for copuladep
"""

import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger
from dotenv import load_dotenv

from src.cli import build_parser, run
from src.config import settings, APP_NAME, APP_VERSION


def setup_logging(level: Optional[str] = None, log_dir: Optional[Path] = None, to_file: Optional[bool] = None):
    """Setup logging configuration"""

    level = level or settings.log_level
    log_dir = Path(log_dir or settings.log_dir)
    to_file = settings.log_to_file if to_file is None else to_file

    # Remove default logger
    logger.remove()

    # Console logger on stderr keeps stdout free for piping
    logger.add(
        sys.stderr,
        level=level.upper(),
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
        colorize=True
    )

    if not to_file:
        return

    log_dir.mkdir(parents=True, exist_ok=True)

    logger.add(
        log_dir / "copuladep.log",
        level="DEBUG",
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
        rotation="10 MB",
        retention="7 days",
        compression="zip"
    )

    # Add error file logger
    logger.add(
        log_dir / "copuladep_errors.log",
        level="ERROR",
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
        rotation="5 MB",
        retention="30 days",
        compression="zip"
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main function"""

    # Load environment variables
    load_dotenv()

    args = build_parser().parse_args(argv)

    # Setup logging
    setup_logging(level=args.log_level)

    logger.debug(f"Starting {APP_NAME} v{APP_VERSION} ({settings.environment})")

    return run(args=args)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        sys.exit(130)
