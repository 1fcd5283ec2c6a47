"""
LineGuard Main Entry Point
Corpus building, guarded line-by-line generation and policy benchmarks
"""

import sys

from app.cli.commands import main
from app.config.settings import settings
from app.utils.helpers import setup_logging

# Initialize logger
logger = setup_logging("app.main")


if __name__ == "__main__":
    logger.info(f"LineGuard starting (log level {settings.log_level})")
    sys.exit(main(sys.argv[1:]))
