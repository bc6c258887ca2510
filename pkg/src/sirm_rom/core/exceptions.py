"""
Custom exceptions for SIRM-ROM.

This module defines domain-specific exceptions for the models, solvers and iteration services.
"""

from typing import Any, List, Optional


class SirmRomError(Exception):
    """Base exception for all SIRM-ROM errors."""

    pass


class ModelConfigurationError(SirmRomError):
    """Exception raised when model, grid or integrator parameters are invalid."""

    def __init__(self, message: str, parameter: Optional[str] = None):
        """
        Initialize ModelConfigurationError.

        Args:
            message: Error message
            parameter: Name of the offending parameter
        """
        super().__init__(message)
        self.parameter = parameter


class ShapeMismatchError(SirmRomError, ValueError):
    """Exception raised when vector or matrix shapes do not conform."""

    def __init__(self, message: str, expected: Any = None, actual: Any = None):
        """
        Initialize ShapeMismatchError.

        Args:
            message: Error message
            expected: Expected shape
            actual: Shape that was received
        """
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class LinearSolveError(SirmRomError):
    """Exception raised when a linear solve breaks down."""

    def __init__(self, message: str, stats: Any = None):
        """
        Initialize LinearSolveError.

        Args:
            message: Error message
            stats: LinearSolveStats of the failed solve, if any
        """
        super().__init__(message)
        self.stats = stats


class PoissonConvergenceError(LinearSolveError):
    """Exception raised when the cavity Poisson solve does not reach its tolerance."""

    pass


class DegenerateEnsembleError(SirmRomError):
    """Exception raised when an information matrix spans no usable subspace."""

    def __init__(self, detail: str = ""):
        message = "degenerate ensemble"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class NonFiniteStateError(SirmRomError):
    """Exception raised when a state vector contains NaN or Inf entries."""

    def __init__(self, message: str, iteration: Optional[int] = None, time: Optional[float] = None):
        """
        Initialize NonFiniteStateError.

        Args:
            message: Error message
            iteration: SIRM iteration index in which the state appeared
            time: Simulation time of the offending state
        """
        super().__init__(message)
        self.iteration = iteration
        self.time = time


class SirmDivergenceError(SirmRomError):
    """Exception raised when successive SIRM iterates drift apart."""

    def __init__(self, iteration: int, history: List[float]):
        """
        Initialize SirmDivergenceError.

        Args:
            iteration: Iteration at which divergence was detected
            history: Successive-difference history up to that iteration
        """
        super().__init__(
            f"SIRM diverging at iteration {iteration}: successive differences {history[-4:]}"
        )
        self.iteration = iteration
        self.history = history


class SubintervalError(SirmRomError):
    """Exception raised when local SIRM fails inside a subinterval."""

    def __init__(self, index: int, message: str):
        """
        Initialize SubintervalError.

        Args:
            index: One-based subinterval index
            message: Description of the underlying failure
        """
        super().__init__(f"Subinterval {index}: {message}")
        self.index = index


class TimeRangeError(SirmRomError):
    """Exception raised when trajectories do not overlap in time."""

    pass


class ScalingFitError(SirmRomError):
    """Exception raised when a scaling regression has too few usable points."""

    def __init__(self, message: str, sizes: Optional[List[int]] = None):
        super().__init__(message)
        self.sizes = sizes or []


class ConfigParseError(SirmRomError):
    """Exception raised when an experiment file cannot be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        """
        Initialize ConfigParseError.

        Args:
            message: Error message
            path: Experiment file path
            line: One-based line number of the offending entry
        """
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class ExperimentNotFoundError(SirmRomError):
    """Exception raised when an experiment kind or method is not available."""

    def __init__(self, name: str):
        """
        Initialize ExperimentNotFoundError.

        Args:
            name: Name of the experiment or method that was not found
        """
        super().__init__(f"Experiment '{name}' not found")
        self.name = name


class CflWarning(UserWarning):
    """Warning emitted when a time step exceeds the advective CFL limit."""

    pass
