"""Utility functions for zeno experiment runs."""

import logging
import sys
import uuid
from pathlib import Path
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np

from .data_types import InvalidInputError

T = TypeVar("T")
R = TypeVar("R")


def setup_logger(name: str, run_id: str, experiment: str, out_dir: Path, level: str = "INFO") -> logging.Logger:
    """Configure logger with file and console output.

    Args:
        name: Logger name
        run_id: Run identifier
        experiment: Experiment name for the log file
        out_dir: Output directory; logs go to <out_dir>/logs/<run_id>/
        level: Console log level

    Returns:
        Configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)

    # Remove existing handlers
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers = []

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level.upper(), logging.INFO))
    console_handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s", datefmt="%H:%M:%S"))
    logger.addHandler(console_handler)

    log_dir = Path(out_dir) / "logs" / run_id
    log_dir.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(log_dir / f"{experiment}.log")
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(
        logging.Formatter("%(asctime)s [%(levelname)s] %(name)s - %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
    )
    logger.addHandler(file_handler)

    return logger


def generate_short_id() -> str:
    """Generate a short 8-character UUID for tracking."""
    return str(uuid.uuid4())[:8]


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope and intercept of log(y) against log(x).

    Raises:
        InvalidInputError: With fewer than two points or non-positive values
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise InvalidInputError("Need at least two matching points for a slope fit")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise InvalidInputError("Log-log fit needs positive finite values")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def ordered_map(func: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> List[R]:
    """Map func over items on up to `jobs` threads; results keep the input order."""
    if jobs <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))
