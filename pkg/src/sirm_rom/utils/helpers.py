"""
Utility functions for SIRM-ROM.

This module contains logging setup, timing and trajectory-distance helpers used across the
application.
"""

import logging
import sys
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core.config import config
from ..core.exceptions import TimeRangeError
from ..models.base import Trajectory


def setup_logging(name: str = "sirm-rom", level: Optional[str] = None) -> logging.Logger:
    """
    Setup logging configuration for the application.

    Args:
        name: Logger name
        level: Log level name (default: SIRM_LOG_LEVEL or INFO)

    Returns:
        logging.Logger: Configured logger instance
    """
    logging.basicConfig(
        level=getattr(logging, (level or config.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )
    return logging.getLogger(name)


class Stopwatch:
    """Wall-clock timer usable as a context manager."""

    def __init__(self) -> None:
        self.start = 0.0
        self.elapsed = 0.0

    def __enter__(self) -> "Stopwatch":
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc: object) -> None:
        self.elapsed = time.perf_counter() - self.start


@dataclass
class DistanceSeries:
    """Pointwise L2 distance between two trajectories on common sample times."""

    times: np.ndarray
    values: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    @property
    def final(self) -> float:
        return float(self.values[-1])


def distance_series(first: Trajectory, second: Trajectory) -> DistanceSeries:
    """
    Unweighted L2 distance per sample time.

    The samples of ``first`` inside the shared time range are used; ``second`` is resampled
    there by linear interpolation.

    Args:
        first: Trajectory providing the sample times
        second: Trajectory compared against it

    Returns:
        DistanceSeries

    Raises:
        TimeRangeError: If the trajectories do not overlap
    """
    if not first.overlaps(second):
        raise TimeRangeError(
            f"Disjoint time ranges [{first.t_start}, {first.t_end}] and "
            f"[{second.t_start}, {second.t_end}]"
        )
    window = first.window(max(first.t_start, second.t_start), min(first.t_end, second.t_end))
    other = second.sample(window.times)
    values = np.linalg.norm(window.states - other.states, axis=0)
    return DistanceSeries(times=window.times, values=values)


def sup_l2_distance(first: np.ndarray, second: np.ndarray) -> float:
    """Largest column-wise L2 distance between two equally shaped snapshot matrices."""
    return float(np.max(np.linalg.norm(first - second, axis=0)))


def linear_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Least-squares slope and intercept."""
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def nearest_divisor(n: int, target: float) -> int:
    """Divisor of n closest to target; ties go to the smaller divisor."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    divisors = [d for d in range(1, n + 1) if n % d == 0]
    return min(divisors, key=lambda d: (abs(d - target), d))
