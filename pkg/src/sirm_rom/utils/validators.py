"""
Validation utilities for SIRM-ROM.

This module contains checks on output locations and experiment settings that run before any
computation starts.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Optional


class OutputDirectoryValidator:
    """Utility class for validating output directories."""

    @staticmethod
    def is_valid(location: Optional[str]) -> bool:
        """
        Validate that results can be written to a directory.

        The directory may not exist yet; then its nearest existing parent must be writable.

        Args:
            location: Directory path

        Returns:
            bool: True if valid, False otherwise
        """
        if not location:
            return False

        path = Path(location)
        if path.exists():
            return path.is_dir() and os.access(path, os.W_OK)

        parent = path.parent
        while not parent.exists() and parent != parent.parent:
            parent = parent.parent
        return parent.is_dir() and os.access(parent, os.W_OK)

    @staticmethod
    def get_error_message(location: Optional[str]) -> str:
        """
        Get detailed error message for output directory validation.

        Args:
            location: Directory that failed validation

        Returns:
            str: Detailed error message
        """
        if not location:
            return (
                "❌ Error: no output directory given. Use --out-dir, [output] out_dir or the "
                "SIRM_OUT_DIR environment variable."
            )
        elif Path(location).exists() and not Path(location).is_dir():
            return f"❌ Error: output location '{location}' exists and is not a directory"
        else:
            return f"❌ Error: output directory '{location}' is not writable"


def validate_step_alignment(t_end: float, dt: float, t_start: float = 0.0) -> bool:
    """
    Check that the span is an integer number of unit steps.

    Args:
        t_end: End time
        dt: Unit time step
        t_start: Start time

    Returns:
        bool: True if (t_end - t_start)/dt is an integer
    """
    if dt <= 0 or t_end <= t_start:
        return False
    steps = (t_end - t_start) / dt
    return abs(steps - round(steps)) <= 1e-8 * max(1.0, steps)


def validate_divisibility(n: int, parts: int) -> bool:
    """Check that ``parts`` equal parts split ``n``."""
    return parts >= 1 and n % parts == 0


def validate_sweep(sweep: Dict[str, List[Any]]) -> List[str]:
    """
    Find sweep keys given without values.

    Args:
        sweep: Sweep lists of an experiment

    Returns:
        List of the empty keys
    """
    return sorted(key for key, values in sweep.items() if not values)
