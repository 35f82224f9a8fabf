# utils/logger.py
import logging
import multiprocessing as mp
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from config import Config

logger = logging.getLogger("ppicod")
logger.setLevel(getattr(logging, Config.LOG_LEVEL, logging.INFO))

fmt = logging.Formatter("%(asctime)s | %(levelname)-7s | %(name)s | %(processName)s | %(message)s")


def in_worker_process() -> bool:
    return mp.parent_process() is not None


if not logger.handlers:
    # only the main process owns the rotating file; pool workers log to the console
    if not in_worker_process():
        log_file = Path(Config.LOG_FILE)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handler = RotatingFileHandler(log_file, maxBytes=5_000_000, backupCount=3)
        handler.setFormatter(fmt)
        logger.addHandler(handler)

    # console; stderr keeps CSV on stdout clean
    ch = logging.StreamHandler(sys.stderr)
    ch.setFormatter(fmt)
    logger.addHandler(ch)


def set_level(level: str):
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
