import sys

from loguru import logger

# Import configuration
import config

# Import CLI module
from cli.app import run


def main(argv=None):
    # Diagnostics go to stderr; stdout carries only reports
    logger.remove()
    logger.add(sys.stderr, level=config.LOG_LEVEL)
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
