"""
Unit tests for helper utilities.
"""

import logging
import time

import numpy as np
import pytest

from src.sirm_rom.core.exceptions import TimeRangeError
from src.sirm_rom.models.base import Trajectory
from src.sirm_rom.utils.helpers import (
    Stopwatch,
    distance_series,
    linear_fit,
    nearest_divisor,
    setup_logging,
    sup_l2_distance,
)


class TestNearestDivisor:
    """Test cases for nearest_divisor."""

    def test_nearest(self):
        """Test exact and nearest divisors."""
        assert nearest_divisor(1000, 50) == 50
        assert nearest_divisor(1000, 33.3) == 40
        assert nearest_divisor(7, 3) == 1

    def test_ties_go_down(self):
        """Test that equidistant divisors resolve to the smaller one."""
        assert nearest_divisor(12, 5) == 4

    def test_invalid(self):
        """Test rejection of a non-positive n."""
        with pytest.raises(ValueError):
            nearest_divisor(0, 1)


class TestFitsAndDistances:
    """Test cases for the least-squares fit and trajectory distances."""

    def test_linear_fit(self):
        """Test slope and intercept of an exact line."""
        x = np.array([1.0, 2.0, 3.0, 4.0])
        slope, intercept = linear_fit(x, 2.5 * x - 1.0)
        assert slope == pytest.approx(2.5)
        assert intercept == pytest.approx(-1.0)

    def test_distance_on_shared_window(self):
        """Test that only the overlapping sample times are compared."""
        first = Trajectory(np.linspace(0.0, 2.0, 5), np.ones((2, 5)))
        second = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 2)))
        series = distance_series(first, second)
        np.testing.assert_allclose(series.times, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(series.values, np.sqrt(2.0))

    def test_disjoint(self):
        """Test rejection of disjoint time ranges."""
        first = Trajectory(np.array([0.0, 1.0]), np.zeros((1, 2)))
        second = Trajectory(np.array([1.5, 2.0]), np.zeros((1, 2)))
        with pytest.raises(TimeRangeError):
            distance_series(first, second)

    def test_sup_l2_distance(self):
        """Test the largest column distance."""
        first = np.zeros((2, 3))
        second = np.array([[3.0, 0.0, 1.0], [4.0, 0.0, 1.0]])
        assert sup_l2_distance(first, second) == pytest.approx(5.0)


class TestStopwatchAndLogging:
    """Test cases for the timer and the logging setup."""

    def test_stopwatch(self):
        """Test that the elapsed time covers the block."""
        with Stopwatch() as watch:
            time.sleep(0.01)
        assert watch.elapsed >= 0.005

    def test_setup_logging_level(self, monkeypatch):
        """Test explicit and environment log levels."""
        logger = setup_logging("sirm-test", "debug")
        assert logger.name == "sirm-test"
        assert logging.getLogger().level == logging.DEBUG
        monkeypatch.setenv("SIRM_LOG_LEVEL", "warning")
        setup_logging()
        assert logging.getLogger().level == logging.WARNING
