"""
Base types for full-order dynamical systems.

This module defines the grid descriptions, the snapshot record (Trajectory) and the FullModel
interface every benchmark implements.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..core.exceptions import ModelConfigurationError, ShapeMismatchError, TimeRangeError

logger = logging.getLogger(__name__)

# Relative slack when matching sample times against a trajectory's time span.
TIME_SLACK = 1e-9

ExplicitClosure = Callable[[float, np.ndarray], np.ndarray]
ImplicitSolver = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GridSpec1D:
    """Uniform periodic 1D grid with ``n_points`` nodes at ``j * spacing``."""

    n_points: int
    domain_length: float = 1.0

    def __post_init__(self) -> None:
        if self.n_points < 4:
            raise ModelConfigurationError(
                f"A periodic grid needs at least 4 points, got {self.n_points}", "n_points"
            )
        if self.domain_length <= 0:
            raise ModelConfigurationError("Domain length must be positive", "domain_length")

    @property
    def spacing(self) -> float:
        return self.domain_length / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) * self.spacing


@dataclass(frozen=True)
class CavitySpec:
    """Square lid-driven cavity on an ``n_side`` x ``n_side`` node grid over the unit square."""

    n_side: int
    reynolds: float
    lid_speed: float = 1.0
    poisson_tol: float = 1e-10
    poisson_preconditioner: str = "jacobi"

    def __post_init__(self) -> None:
        if self.n_side < 5:
            raise ModelConfigurationError(f"Cavity grid too small: {self.n_side}", "n_side")
        if self.reynolds <= 0:
            raise ModelConfigurationError("Reynolds number must be positive", "reynolds")
        if self.poisson_preconditioner not in ("jacobi", "spectral"):
            raise ModelConfigurationError(
                f"Unknown Poisson preconditioner '{self.poisson_preconditioner}'",
                "poisson_preconditioner",
            )

    @property
    def h(self) -> float:
        return 1.0 / (self.n_side - 1)

    @property
    def dim(self) -> int:
        return 2 * self.n_side * self.n_side

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_side)


@dataclass
class Trajectory:
    """
    Time-stamped sequence of state vectors.

    ``states`` holds one column per entry of ``times``; times are strictly increasing.
    """

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states.reshape(-1, 1)
        if self.states.shape[1] != self.times.size:
            raise ShapeMismatchError(
                "Trajectory needs one state column per time",
                expected=self.times.size,
                actual=self.states.shape[1],
            )
        if self.times.size == 0:
            raise ShapeMismatchError("Trajectory must hold at least one sample")
        if np.any(np.diff(self.times) <= 0):
            raise ShapeMismatchError("Trajectory times must be strictly increasing")

    @property
    def dim(self) -> int:
        return int(self.states.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.times.size)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[:, -1]

    def overlaps(self, other: "Trajectory") -> bool:
        """Check whether two trajectories share a nonempty time range."""
        return max(self.t_start, other.t_start) <= min(self.t_end, other.t_end) + self._slack()

    def _slack(self) -> float:
        return TIME_SLACK * max(1.0, abs(self.t_start), abs(self.t_end))

    def sample(self, times: Sequence[float]) -> "Trajectory":
        """
        Resample the trajectory at the given times by linear interpolation.

        Args:
            times: Increasing sample times inside the trajectory's span

        Returns:
            Trajectory: Resampled trajectory

        Raises:
            TimeRangeError: If a requested time lies outside the span
        """
        query = np.asarray(times, dtype=float).reshape(-1)
        slack = self._slack()
        if query.size and (query[0] < self.t_start - slack or query[-1] > self.t_end + slack):
            raise TimeRangeError(
                f"Sample times [{query[0]}, {query[-1]}] outside trajectory span "
                f"[{self.t_start}, {self.t_end}]"
            )
        query = np.clip(query, self.t_start, self.t_end)
        if self.n_samples == 1:
            return Trajectory(query, np.repeat(self.states, query.size, axis=1))

        index = np.searchsorted(self.times, query, side="right") - 1
        index = np.clip(index, 0, self.n_samples - 2)
        left = self.times[index]
        weight = (query - left) / (self.times[index + 1] - left)
        # Snap to stored samples so resampling on the own time grid is exact.
        exact_left = np.isclose(query, left, rtol=0.0, atol=slack)
        exact_right = np.isclose(query, self.times[index + 1], rtol=0.0, atol=slack)
        weight = np.where(exact_left, 0.0, np.where(exact_right, 1.0, weight))
        states = self.states[:, index] * (1.0 - weight) + self.states[:, index + 1] * weight
        return Trajectory(query, states)

    def window(self, t_start: float, t_end: float) -> "Trajectory":
        """Get the stored samples with times inside [t_start, t_end]."""
        slack = self._slack()
        mask = (self.times >= t_start - slack) & (self.times <= t_end + slack)
        if not np.any(mask):
            raise TimeRangeError(f"No samples inside [{t_start}, {t_end}]")
        return Trajectory(self.times[mask], self.states[:, mask])

    @staticmethod
    def concatenate(parts: List["Trajectory"]) -> "Trajectory":
        """Join consecutive trajectories, dropping each shared endpoint once."""
        if not parts:
            raise ShapeMismatchError("Nothing to concatenate")
        times = [parts[0].times]
        states = [parts[0].states]
        for previous, part in zip(parts[:-1], parts[1:]):
            if abs(part.t_start - previous.t_end) <= previous._slack():
                times.append(part.times[1:])
                states.append(part.states[:, 1:])
            else:
                times.append(part.times)
                states.append(part.states)
        return Trajectory(np.concatenate(times), np.hstack(states))


class FullModel:
    """
    Full-order dynamical system x' = f(t, x) = g(t, x) + L x.

    ``g`` is the explicitly integrated part and ``L`` the optional sparse stiff operator that
    the IMEX integrator treats with Crank-Nicolson. Subclasses override ``explicit_part`` and,
    where they need it, the constraint, the implicit solver and the Galerkin construction.
    """

    name = "full-model"
    field_names: Tuple[str, ...] = ("x",)

    def __init__(
        self,
        dim: int,
        initial_state: np.ndarray,
        stiff_operator: Optional[sp.spmatrix] = None,
    ):
        if dim <= 0:
            raise ModelConfigurationError(f"State dimension must be positive, got {dim}", "dim")
        initial = np.asarray(initial_state, dtype=float).reshape(-1)
        if initial.size != dim:
            raise ShapeMismatchError("Initial state length differs from dim", dim, initial.size)
        if stiff_operator is not None:
            stiff_operator = sp.csr_matrix(stiff_operator)
            if stiff_operator.shape != (dim, dim):
                raise ShapeMismatchError(
                    "Stiff operator shape differs from (dim, dim)", (dim, dim), stiff_operator.shape
                )
        self._dim = dim
        self._initial_state = initial
        self._initial_state.setflags(write=False)
        self.stiff_operator = stiff_operator
        self._implicit_cache: dict = {}

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def initial_state(self) -> np.ndarray:
        return self._initial_state.copy()

    def explicit_part(self, t: float, x: np.ndarray) -> np.ndarray:
        """Explicitly integrated part g(t, x); zero unless overridden."""
        return np.zeros(self._dim)

    def stiff_apply(self, x: np.ndarray) -> np.ndarray:
        """Apply the stiff operator, or return zeros when there is none."""
        if self.stiff_operator is None:
            return np.zeros_like(x)
        return self.stiff_operator @ x

    def eval_field(self, t: float, x: np.ndarray) -> np.ndarray:
        """Evaluate the full vector field f(t, x)."""
        x = self._check_state(x)
        return self.explicit_part(t, x) + self.stiff_apply(x)

    def eval_fields(self, times: Sequence[float], states: np.ndarray) -> np.ndarray:
        """Evaluate the vector field column by column for a snapshot matrix."""
        return np.column_stack(
            [self.eval_field(float(t), states[:, i]) for i, t in enumerate(times)]
        )

    def step_explicit_part(self, t: float, x: np.ndarray) -> np.ndarray:
        """Explicit part used by the time stepper on constrained states."""
        return self.explicit_part(t, x)

    def constrain(self, x: np.ndarray) -> np.ndarray:
        """Project a state onto the model's algebraic constraints (identity by default)."""
        return x

    def cfl_number(self, x: np.ndarray, dt: float) -> float:
        """Advective CFL number of a state for time step ``dt``."""
        return 0.0

    def field_slices(self) -> List[slice]:
        """Row ranges of the physical fields stacked in the state vector."""
        return [slice(0, self._dim)]

    def implicit_solver(self, dt: float) -> Optional[ImplicitSolver]:
        """
        Get a solver for (I - dt/2 L) x = rhs, cached per time step.

        Returns:
            Callable solving the Crank-Nicolson system, or None without a stiff operator
        """
        if self.stiff_operator is None:
            return None
        if dt not in self._implicit_cache:
            system = sp.identity(self._dim, format="csc") - 0.5 * dt * self.stiff_operator.tocsc()
            self._implicit_cache[dt] = splu(system.tocsc()).solve
        return self._implicit_cache[dt]

    def galerkin(self, phi: np.ndarray) -> Tuple[ExplicitClosure, np.ndarray]:
        """
        Galerkin-project the model onto the columns of ``phi``.

        Args:
            phi: Column-orthonormal basis (dim x k)

        Returns:
            Tuple of the reduced explicit closure z -> phi^T g(t, phi z) and phi^T L phi
        """
        reduced_stiff = phi.T @ np.asarray(self.stiff_apply_matrix(phi))

        def closure(t: float, z: np.ndarray) -> np.ndarray:
            return phi.T @ self.explicit_part(t, phi @ z)

        return closure, reduced_stiff

    def stiff_apply_matrix(self, phi: np.ndarray) -> np.ndarray:
        """Apply the stiff operator to every column of ``phi``."""
        if self.stiff_operator is None:
            return np.zeros_like(phi)
        return np.asarray(self.stiff_operator @ phi)

    def _check_state(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self._dim,):
            raise ShapeMismatchError("State vector has the wrong shape", (self._dim,), x.shape)
        return x
