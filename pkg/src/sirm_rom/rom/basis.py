"""
Reduced bases from snapshot ensembles.

The information matrix pairs state snapshots with gamma-scaled tangent vectors. Bases come
either from a truncated SVD with an energy criterion (POD) or, for small ensembles, from modified
Gram-Schmidt with reorthogonalization.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from ..core.config import config
from ..core.exceptions import (
    DegenerateEnsembleError,
    LinearSolveError,
    ModelConfigurationError,
    ShapeMismatchError,
)
from ..models.base import FullModel, Trajectory

logger = logging.getLogger(__name__)

ENSEMBLES = ("states_and_tangents", "initial_and_tangents")


@dataclass
class InformationMatrix:
    """
    Extended data ensemble.

    With the ``states_and_tangents`` layout the columns are [X, gamma F] (2m columns); with
    ``initial_and_tangents`` they are [x0, gamma F] (m + 1 columns). When ``field_slices`` is set,
    ``data`` splits every column into one zero-padded column per field.
    """

    columns: np.ndarray
    gamma: float
    m: int
    layout: str = "states_and_tangents"
    field_slices: Optional[List[slice]] = None

    def __post_init__(self) -> None:
        expected = 2 * self.m if self.layout == "states_and_tangents" else self.m + 1
        if self.columns.ndim != 2 or self.columns.shape[1] != expected:
            raise ShapeMismatchError(
                f"Information matrix with layout '{self.layout}' needs {expected} columns",
                expected,
                self.columns.shape,
            )

    @property
    def n(self) -> int:
        return int(self.columns.shape[0])

    @property
    def tangents(self) -> np.ndarray:
        return self.columns[:, -self.m :] / self.gamma

    @property
    def data(self) -> np.ndarray:
        """Matrix whose column span defines the subspace."""
        if not self.field_slices or len(self.field_slices) < 2:
            return self.columns
        blocks = []
        for part in self.field_slices:
            block = np.zeros_like(self.columns)
            block[part] = self.columns[part]
            blocks.append(block)
        return np.hstack(blocks)


@dataclass(frozen=True)
class EnergyCriterion:
    """Smallest k with retained energy fraction above 1 - eta, clamped to [k_min, k_max]."""

    eta: float
    k_min: int = 1
    k_max: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.eta < 1.0:
            raise ModelConfigurationError(f"eta must lie in (0, 1), got {self.eta}", "eta")
        if self.k_min < 1:
            raise ModelConfigurationError("k_min must be at least 1", "k_min")
        if self.k_max is not None and self.k_max < self.k_min:
            raise ModelConfigurationError("k_max must not be below k_min", "k_max")

    @classmethod
    def fixed(cls, k: int, eta: float = 1e-8) -> "EnergyCriterion":
        """Criterion that always keeps exactly k modes (when the ensemble allows)."""
        return cls(eta=eta, k_min=k, k_max=k)

    def select(self, singular_values: np.ndarray) -> int:
        """Retained dimension for a non-increasing spectrum."""
        energy = singular_values**2
        cumulative = np.cumsum(energy) / energy.sum()
        above = np.flatnonzero(cumulative > 1.0 - self.eta)
        k = int(above[0]) + 1 if above.size else singular_values.size
        upper = singular_values.size
        if self.k_max is not None:
            upper = min(self.k_max, upper)
        return int(min(max(k, self.k_min), upper))


@dataclass
class Basis:
    """Column-orthonormal basis with the spectrum it was cut from (empty for Gram-Schmidt)."""

    phi: np.ndarray
    singular_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    energy_fraction: float = 1.0

    @property
    def n(self) -> int:
        return int(self.phi.shape[0])

    @property
    def k(self) -> int:
        return int(self.phi.shape[1])

    def orthonormality_error(self) -> float:
        """Max-norm deviation of phi^T phi from the identity."""
        return float(np.max(np.abs(self.phi.T @ self.phi - np.eye(self.k))))


def assemble_information_matrix(
    traj: Trajectory,
    model: FullModel,
    gamma: float = config.DEFAULT_GAMMA,
    ensemble: str = "states_and_tangents",
    split_fields: bool = False,
    tangents: Optional[np.ndarray] = None,
) -> InformationMatrix:
    """
    Build the information matrix of a snapshot record.

    Args:
        traj: Snapshots x(t_1), ..., x(t_m)
        model: Full model providing the tangents f(t_i, x(t_i))
        gamma: Tangent weighting (> 0)
        ensemble: 'states_and_tangents' or 'initial_and_tangents'
        split_fields: Split columns per physical field of the model
        tangents: Precomputed tangents, skipping model evaluations

    Returns:
        InformationMatrix
    """
    if gamma <= 0:
        raise ModelConfigurationError(f"gamma must be positive, got {gamma}", "gamma")
    if ensemble not in ENSEMBLES:
        raise ModelConfigurationError(f"Unknown ensemble '{ensemble}'", "ensemble")
    if traj.dim != model.dim:
        raise ShapeMismatchError("Snapshot dimension differs from model", model.dim, traj.dim)
    if tangents is None:
        tangents = model.eval_fields(traj.times, traj.states)
    if ensemble == "states_and_tangents":
        columns = np.hstack([traj.states, gamma * tangents])
    else:
        columns = np.hstack([traj.states[:, :1], gamma * tangents])
    return InformationMatrix(
        columns=columns,
        gamma=gamma,
        m=traj.n_samples,
        layout=ensemble,
        field_slices=model.field_slices() if split_fields else None,
    )


def _fix_signs(phi: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is non-negative."""
    pivots = phi[np.argmax(np.abs(phi), axis=0), np.arange(phi.shape[1])]
    return phi * np.where(pivots < 0, -1.0, 1.0)


def _svd(matrix: np.ndarray) -> tuple:
    try:
        return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.warning("⚠️ gesdd did not converge, retrying with gesvd")
        try:
            return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as e:
            raise LinearSolveError(f"SVD failed: {e}") from e


def pod_basis(Y: InformationMatrix, crit: EnergyCriterion) -> Basis:
    """
    POD basis of an information matrix.

    Args:
        Y: Information matrix
        crit: Energy criterion selecting k

    Returns:
        Basis with the first k left singular vectors and the full spectrum

    Raises:
        DegenerateEnsembleError: If Y has no nonzero column
    """
    data = Y.data
    if not np.any(data):
        raise DegenerateEnsembleError("all columns are zero")
    left, singular_values, _ = _svd(data)
    k = crit.select(singular_values)
    energy = singular_values**2
    fraction = float(energy[:k].sum() / energy.sum())
    return Basis(
        phi=_fix_signs(left[:, :k]),
        singular_values=singular_values,
        energy_fraction=fraction,
    )


def gram_schmidt_basis(
    Y: InformationMatrix, drop_tol: float = config.GRAM_SCHMIDT_DROP_TOL
) -> Basis:
    """
    Orthonormalize the columns of Y in order by modified Gram-Schmidt, twice per column.

    Columns whose remainder falls below ``drop_tol`` times their own norm are dropped.

    Raises:
        DegenerateEnsembleError: If every column is dropped
    """
    vectors: List[np.ndarray] = []
    for column in Y.data.T:
        norm = float(np.linalg.norm(column))
        if norm == 0.0:
            continue
        v = column.astype(float, copy=True)
        for _ in range(2):
            for q in vectors:
                v -= (q @ v) * q
        remainder = float(np.linalg.norm(v))
        if remainder < drop_tol * norm:
            continue
        vectors.append(v / remainder)
    if not vectors:
        raise DegenerateEnsembleError("every column dropped by Gram-Schmidt")
    return Basis(phi=np.column_stack(vectors), singular_values=np.empty(0), energy_fraction=1.0)


def project(basis: Basis, x: np.ndarray) -> np.ndarray:
    """Reduced coordinates phi^T x of a state (or of every column of a matrix)."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != basis.n:
        raise ShapeMismatchError("State length differs from basis rows", basis.n, x.shape[0])
    return basis.phi.T @ x


def lift(basis: Basis, z: np.ndarray) -> np.ndarray:
    """Full state phi z of reduced coordinates (or of every column of a matrix)."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != basis.k:
        raise ShapeMismatchError("Coordinate length differs from basis size", basis.k, z.shape[0])
    return basis.phi @ z


def truncation_error_estimate(singular_values: Sequence[float], k: int) -> float:
    """Tail sum of squared singular values beyond index k."""
    values = np.asarray(singular_values, dtype=float)
    return float(np.sum(values[k:] ** 2))
