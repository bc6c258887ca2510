"""
Linear solvers for the implicit half of the time steppers.

- ``solve_cyclic_tridiagonal``: periodic tridiagonal systems (Crank-Nicolson on periodic grids)
  by the Thomas algorithm with a Sherman-Morrison correction for the two corner entries.
- ``solve_poisson_cavity``: the 5-point Dirichlet Poisson problem of the cavity stream function
  by preconditioned conjugate gradients.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.fft import dstn, idstn
from scipy.linalg import LinAlgError, solve_banded
from scipy.sparse.linalg import LinearOperator, cg

from ..core.config import config
from ..core.exceptions import LinearSolveError, PoissonConvergenceError, ShapeMismatchError
from ..models.base import CavitySpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearSolveStats:
    """Iteration count and final residual 2-norm of one linear solve."""

    iterations: int
    residual_norm: float

    def __post_init__(self) -> None:
        if self.residual_norm < 0:
            raise ValueError("Residual norm must be non-negative")


def _banded(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Pack a (non-cyclic) tridiagonal matrix into solve_banded's (1, 1) layout."""
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return ab


def cyclic_tridiagonal_matvec(
    lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """Multiply the cyclic tridiagonal matrix (lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1])."""
    return lower * np.roll(x, 1) + diag * x + upper * np.roll(x, -1)


def solve_cyclic_tridiagonal(
    lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray
) -> Tuple[np.ndarray, LinearSolveStats]:
    """
    Solve a cyclic tridiagonal system.

    Row i reads ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`` with indices
    taken modulo n, so ``lower[0]`` and ``upper[n-1]`` are the corner entries.

    Args:
        lower: Sub-diagonal coefficients including the wrap entry lower[0]
        diag: Diagonal coefficients
        upper: Super-diagonal coefficients including the wrap entry upper[n-1]
        rhs: Right-hand side

    Returns:
        Tuple of the solution and its LinearSolveStats

    Raises:
        LinearSolveError: On a zero pivot or singular system
    """
    lower, diag, upper, rhs = (np.asarray(v, dtype=float) for v in (lower, diag, upper, rhs))
    n = diag.size
    if not (lower.size == upper.size == rhs.size == n):
        raise ShapeMismatchError("Band lengths must match the right-hand side", n, rhs.size)
    if n < 3:
        raise LinearSolveError(f"Cyclic tridiagonal systems need n >= 3, got {n}")

    corner_bottom = upper[-1]  # A[n-1, 0]
    corner_top = lower[0]  # A[0, n-1]
    gamma = -diag[0]
    if gamma == 0.0:
        raise LinearSolveError("Zero pivot in cyclic tridiagonal solve")

    modified = diag.copy()
    modified[0] -= gamma
    modified[-1] -= corner_bottom * corner_top / gamma
    ab = _banded(lower, modified, upper)

    correction = np.zeros(n)
    correction[0] = gamma
    correction[-1] = corner_bottom
    try:
        both = solve_banded((1, 1), ab, np.column_stack([rhs, correction]), check_finite=True)
    except (LinAlgError, ValueError) as e:
        raise LinearSolveError(f"Tridiagonal solve failed: {e}") from e
    y, z = both[:, 0], both[:, 1]

    denominator = 1.0 + z[0] + corner_top * z[-1] / gamma
    if denominator == 0.0:
        raise LinearSolveError("Singular Sherman-Morrison correction")
    x = y - ((y[0] + corner_top * y[-1] / gamma) / denominator) * z

    residual = float(np.linalg.norm(cyclic_tridiagonal_matvec(lower, diag, upper, x) - rhs))
    return x, LinearSolveStats(iterations=1, residual_norm=residual)


def poisson_matrix(n_interior: int, h: float) -> sp.csr_matrix:
    """Negative 5-point Laplacian -Delta_h on an n_interior^2 grid with zero Dirichlet walls."""
    ones = np.ones(n_interior)
    second = sp.diags([-ones[:-1], 2.0 * ones, -ones[:-1]], [-1, 0, 1])
    eye = sp.identity(n_interior)
    return ((sp.kron(eye, second) + sp.kron(second, eye)) / (h * h)).tocsr()


_SPECTRAL_CACHE: Dict[Tuple[int, float], np.ndarray] = {}


def _spectral_eigenvalues(n_interior: int, h: float) -> np.ndarray:
    key = (n_interior, h)
    if key not in _SPECTRAL_CACHE:
        k = np.arange(1, n_interior + 1)
        lam = 2.0 - 2.0 * np.cos(np.pi * k / (n_interior + 1))
        _SPECTRAL_CACHE[key] = (lam[:, None] + lam[None, :]) / (h * h)
    return _SPECTRAL_CACHE[key]


def _preconditioner(
    kind: str, matrix: sp.csr_matrix, n_interior: int, h: float
) -> Optional[LinearOperator]:
    size = n_interior * n_interior
    if kind == "jacobi":
        inverse_diag = 1.0 / matrix.diagonal()
        return LinearOperator((size, size), matvec=lambda r: inverse_diag * np.ravel(r))
    if kind == "spectral":
        eigenvalues = _spectral_eigenvalues(n_interior, h)

        def apply(r: np.ndarray) -> np.ndarray:
            field = np.reshape(r, (n_interior, n_interior))
            coefficients = dstn(field, type=1, norm="ortho") / eigenvalues
            return np.ravel(idstn(coefficients, type=1, norm="ortho"))

        return LinearOperator((size, size), matvec=apply)
    raise LinearSolveError(f"Unknown preconditioner '{kind}'")


def solve_poisson(
    rhs: np.ndarray,
    matrix: sp.csr_matrix,
    n_interior: int,
    h: float,
    tol: float = config.POISSON_TOL,
    preconditioner: str = "jacobi",
    x0: Optional[np.ndarray] = None,
    max_iterations: int = config.POISSON_MAX_ITERATIONS,
) -> Tuple[np.ndarray, LinearSolveStats]:
    """
    Solve -Delta_h psi = rhs on the interior nodes by preconditioned conjugate gradients.

    Args:
        rhs: Interior right-hand side, flattened row-major
        matrix: The matrix returned by ``poisson_matrix``
        n_interior: Interior nodes per side
        h: Grid spacing
        tol: Relative residual tolerance
        preconditioner: 'jacobi' or 'spectral'
        x0: Optional warm start
        max_iterations: Iteration cap

    Returns:
        Tuple of the interior solution and its LinearSolveStats

    Raises:
        PoissonConvergenceError: If the tolerance is not met within max_iterations
    """
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), LinearSolveStats(iterations=0, residual_norm=0.0)

    counter = {"iterations": 0}

    def count(_: np.ndarray) -> None:
        counter["iterations"] += 1

    solution, info = cg(
        matrix,
        rhs,
        x0=x0,
        rtol=tol,
        atol=0.0,
        maxiter=max_iterations,
        M=_preconditioner(preconditioner, matrix, n_interior, h),
        callback=count,
    )
    residual = float(np.linalg.norm(rhs - matrix @ solution))
    stats = LinearSolveStats(iterations=counter["iterations"], residual_norm=residual)
    if info != 0 or not np.isfinite(residual) or residual > 10.0 * tol * rhs_norm:
        raise PoissonConvergenceError(
            f"Poisson PCG did not converge: relative residual {residual / rhs_norm:.3e} "
            f"after {stats.iterations} iterations",
            stats,
        )
    logger.debug(f"Poisson PCG converged in {stats.iterations} iterations")
    return solution, stats


def solve_poisson_cavity(
    omega_interior: np.ndarray,
    spec: CavitySpec,
    tol: Optional[float] = None,
    x0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, LinearSolveStats]:
    """
    Solve psi_xx + psi_yy = -omega for the cavity stream function with psi = 0 on the walls.

    Args:
        omega_interior: Vorticity at interior nodes, shape (N-2, N-2) or flattened
        spec: Cavity description (grid size, spacing, preconditioner)
        tol: Relative residual tolerance (default: spec.poisson_tol)
        x0: Optional warm start for the interior stream function

    Returns:
        Tuple of the full N x N stream-function field and the solve statistics
    """
    n_interior = spec.n_side - 2
    omega = np.asarray(omega_interior, dtype=float).reshape(-1)
    if omega.size != n_interior * n_interior:
        raise ShapeMismatchError(
            "Interior vorticity has the wrong size", n_interior * n_interior, omega.size
        )
    matrix = _poisson_matrix_cached(n_interior, spec.h)
    interior, stats = solve_poisson(
        omega,
        matrix,
        n_interior,
        spec.h,
        tol=spec.poisson_tol if tol is None else tol,
        preconditioner=spec.poisson_preconditioner,
        x0=x0,
    )
    psi = np.zeros((spec.n_side, spec.n_side))
    psi[1:-1, 1:-1] = interior.reshape(n_interior, n_interior)
    return psi, stats


_MATRIX_CACHE: Dict[Tuple[int, float], sp.csr_matrix] = {}


def _poisson_matrix_cached(n_interior: int, h: float) -> sp.csr_matrix:
    key = (n_interior, h)
    if key not in _MATRIX_CACHE:
        _MATRIX_CACHE[key] = poisson_matrix(n_interior, h)
    return _MATRIX_CACHE[key]
