#!/usr/bin/env python3
# =============================================================================
# hesslab - Main Entry Point
# =============================================================================

import sys
from pathlib import Path

# Add src directory to Python path
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

from loguru import logger
from hesslab.core.config import HesslabSettings, settings
from hesslab.core.log import setup_logging
from hesslab.cli import app


def validate_environment(config: HesslabSettings) -> bool:
    """
    Report the process settings the commands will run with.

    Args:
        config: Settings object.

    Returns:
        bool: False when a configured data directory is missing.
    """
    logger.debug(f"Dense Hessian cap: {config.dense_hessian_cap}")
    logger.debug(f"Full output Hessian cap: {config.full_output_cap}")
    logger.debug(f"Threads: {config.threads}, chunk size: {config.chunk_size}")

    if config.mnist_dir and not Path(config.mnist_dir).is_dir():
        logger.error(f"HESSLAB_MNIST_DIR does not exist: {config.mnist_dir}")
        return False
    if not config.mnist_dir:
        logger.debug("HESSLAB_MNIST_DIR unset; MNIST commands need explicit file paths")
    return True


def main() -> None:
    """
    Main entry point for the hesslab command line.
    """
    setup_logging(settings)

    if not validate_environment(settings):
        sys.exit(3)

    app()


if __name__ == "__main__":
    main()
