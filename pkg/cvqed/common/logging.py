import logging
import os
import sys

from cvqed.common.constants import ENV_LOG_LEVEL


def get_logger(name):
    """Creates and returns a logger with the specified name.

    The level defaults to INFO and can be overridden with CVQED_LOG_LEVEL.
    """
    logger = logging.getLogger(name)
    level = os.environ.get(ENV_LOG_LEVEL, "INFO").upper()
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setLevel(level)
        formatter = logging.Formatter("%(asctime)s %(levelname)s: %(message)s")
        handler.setFormatter(formatter)
        logger.addHandler(handler)
        logger.propagate = False
    return logger
