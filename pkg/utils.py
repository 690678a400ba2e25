import logging
import os

from dotenv import load_dotenv

# Load environment variables at module import time
load_dotenv()

# Lab-wide defaults, overridable from the environment or a .env file
DEFAULT_SEED = int(os.getenv("LAB_SEED", "0"))
LOG_LEVEL = os.getenv("LAB_LOG_LEVEL", "WARNING")
CUT_EXACT_LIMIT = int(os.getenv("LAB_CUT_EXACT_LIMIT", "25"))
CUT_DISTANCE_EXACT_LIMIT = int(os.getenv("LAB_CUT_DISTANCE_EXACT_LIMIT", "7"))
OUTPUT_DIR = os.getenv("LAB_OUTPUT_DIR", ".")

_LOG_FORMAT = "%(levelname)s: %(name)s - %(message)s"


def configure_logging(level=None):
    """
    Configure the root logger for the lab.

    :param level: Logging level name or number. Falls back to LAB_LOG_LEVEL.
    """
    level = level if level is not None else LOG_LEVEL
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=_LOG_FORMAT)
    logging.getLogger("mclab").setLevel(level)
