"""
Unit tests for the cyclic tridiagonal and Poisson solvers.
"""

import numpy as np
import pytest

from src.sirm_rom.core.exceptions import (
    LinearSolveError,
    PoissonConvergenceError,
    ShapeMismatchError,
)
from src.sirm_rom.models.base import CavitySpec
from src.sirm_rom.solvers.linear import (
    LinearSolveStats,
    cyclic_tridiagonal_matvec,
    poisson_matrix,
    solve_cyclic_tridiagonal,
    solve_poisson,
    solve_poisson_cavity,
)


def _dense_cyclic(lower, diag, upper):
    n = diag.size
    dense = np.diag(diag)
    for i in range(n):
        dense[i, (i - 1) % n] += lower[i]
        dense[i, (i + 1) % n] += upper[i]
    return dense


class TestCyclicTridiagonal:
    """Test cases for the periodic Thomas solve."""

    def test_identity(self):
        """Test the identity system."""
        rhs = np.arange(6, dtype=float)
        x, stats = solve_cyclic_tridiagonal(np.zeros(6), np.ones(6), np.zeros(6), rhs)
        np.testing.assert_allclose(x, rhs, atol=1e-14)
        assert stats.iterations == 1

    def test_matches_dense_solve(self):
        """Test a random diagonally dominant system against numpy."""
        rng = np.random.default_rng(0)
        n = 25
        lower, upper = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
        diag = 4.0 + rng.uniform(0, 1, n)
        rhs = rng.standard_normal(n)
        x, stats = solve_cyclic_tridiagonal(lower, diag, upper, rhs)
        np.testing.assert_allclose(
            x, np.linalg.solve(_dense_cyclic(lower, diag, upper), rhs), atol=1e-12
        )
        assert stats.residual_norm < 1e-12

    def test_matvec_matches_dense(self):
        """Test the cyclic product against the dense matrix."""
        rng = np.random.default_rng(1)
        lower, diag, upper, x = (rng.standard_normal(7) for _ in range(4))
        np.testing.assert_allclose(
            cyclic_tridiagonal_matvec(lower, diag, upper, x),
            _dense_cyclic(lower, diag, upper) @ x,
            atol=1e-12,
        )

    def test_zero_rhs(self):
        """Test that a zero right-hand side gives zero."""
        band = np.full(5, -1.0)
        x, _ = solve_cyclic_tridiagonal(band, np.full(5, 3.0), band, np.zeros(5))
        assert np.all(x == 0.0)

    def test_too_small(self):
        """Test that n < 3 is rejected."""
        with pytest.raises(LinearSolveError):
            solve_cyclic_tridiagonal(np.zeros(2), np.ones(2), np.zeros(2), np.ones(2))

    def test_length_mismatch(self):
        """Test that bands must match the right-hand side."""
        with pytest.raises(ShapeMismatchError):
            solve_cyclic_tridiagonal(np.zeros(4), np.ones(5), np.zeros(5), np.ones(5))


class TestPoisson:
    """Test cases for the cavity Poisson solve."""

    @staticmethod
    def _manufactured_error(n_side: int) -> float:
        spec = CavitySpec(n_side=n_side, reynolds=100.0)
        y, x = np.meshgrid(spec.nodes, spec.nodes, indexing="ij")
        exact = np.sin(np.pi * x) * np.sin(np.pi * y)
        omega = 2.0 * np.pi**2 * exact
        psi, stats = solve_poisson_cavity(omega[1:-1, 1:-1], spec)
        assert np.all(psi[0, :] == 0.0) and np.all(psi[:, 0] == 0.0)
        assert stats.iterations > 0
        return float(np.max(np.abs(psi - exact)))

    def test_manufactured_solution(self):
        """Test second-order convergence for psi = sin(pi x) sin(pi y)."""
        coarse, fine = self._manufactured_error(17), self._manufactured_error(33)
        assert fine < 5e-3
        assert coarse / fine == pytest.approx(4.0, rel=0.05)

    def test_matches_dense_solve(self):
        """Test a random right-hand side against the dense solve."""
        n_interior, h = 15, 1.0 / 16
        matrix = poisson_matrix(n_interior, h)
        rhs = np.random.default_rng(2).standard_normal(n_interior**2)
        x, _ = solve_poisson(rhs, matrix, n_interior, h, tol=1e-12)
        dense = np.linalg.solve(matrix.toarray(), rhs)
        assert np.linalg.norm(x - dense) < 1e-8 * np.linalg.norm(dense)

    def test_spectral_preconditioner_is_exact(self):
        """Test that the fast-sine preconditioner inverts the operator."""
        n_interior, h = 15, 1.0 / 16
        matrix = poisson_matrix(n_interior, h)
        rhs = np.random.default_rng(3).standard_normal(n_interior**2)
        x, stats = solve_poisson(rhs, matrix, n_interior, h, tol=1e-10, preconditioner="spectral")
        assert stats.iterations <= 2
        np.testing.assert_allclose(matrix @ x, rhs, atol=1e-8)

    def test_mirror_symmetry(self):
        """Test that a mirror-symmetric source gives a mirror-symmetric solution."""
        spec = CavitySpec(n_side=17, reynolds=100.0)
        omega = np.random.default_rng(4).standard_normal((15, 15))
        omega = omega + omega[:, ::-1]
        psi, _ = solve_poisson_cavity(omega, spec, tol=1e-12)
        np.testing.assert_allclose(psi, psi[:, ::-1], atol=1e-10)

    def test_zero_rhs(self):
        """Test the zero shortcut."""
        x, stats = solve_poisson(np.zeros(9), poisson_matrix(3, 0.25), 3, 0.25)
        assert np.all(x == 0.0)
        assert stats.iterations == 0

    def test_iteration_cap(self):
        """Test the convergence failure after one iteration."""
        n_interior, h = 15, 1.0 / 16
        rhs = np.random.default_rng(5).standard_normal(n_interior**2)
        with pytest.raises(PoissonConvergenceError) as excinfo:
            solve_poisson(
                rhs, poisson_matrix(n_interior, h), n_interior, h, tol=1e-12, max_iterations=1
            )
        assert excinfo.value.stats is not None

    def test_unknown_preconditioner(self):
        """Test rejection of unknown preconditioners."""
        with pytest.raises(LinearSolveError):
            solve_poisson(np.ones(9), poisson_matrix(3, 0.25), 3, 0.25, preconditioner="ilu")

    def test_interior_size_checked(self):
        """Test the interior size check of the cavity wrapper."""
        with pytest.raises(ShapeMismatchError):
            solve_poisson_cavity(np.ones(10), CavitySpec(n_side=17, reynolds=100.0))


class TestLinearSolveStats:
    """Test cases for the solve statistics."""

    def test_negative_residual(self):
        """Test that residual norms cannot be negative."""
        with pytest.raises(ValueError):
            LinearSolveStats(iterations=1, residual_norm=-1.0)
