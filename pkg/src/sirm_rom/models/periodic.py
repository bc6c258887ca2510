"""
Periodic 1D benchmarks: linear advection-diffusion and viscous Burgers.

Both use first-order upwinding for the advective term (explicit, Adams-Bashforth) and the
second-order central difference for diffusion (implicit, Crank-Nicolson). The cyclic tridiagonal
Crank-Nicolson system is solved directly by Thomas plus Sherman-Morrison.
"""

import logging
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from ..core.exceptions import ModelConfigurationError
from ..solvers.linear import solve_cyclic_tridiagonal
from .base import ExplicitClosure, FullModel, GridSpec1D, ImplicitSolver

logger = logging.getLogger(__name__)


def cubic_spline_profile(s: np.ndarray) -> np.ndarray:
    """Compactly supported cubic spline of the scaled distance ``s``."""
    s = np.abs(np.asarray(s, dtype=float))
    inner = 1.0 - 1.5 * s**2 + 0.75 * s**3
    outer = 0.25 * (2.0 - s) ** 3
    return np.where(s <= 1.0, inner, np.where(s <= 2.0, outer, 0.0))


def cubic_spline_ic(grid: GridSpec1D) -> np.ndarray:
    """Spline bump centred at x = 1/3 with half-width 0.2, sampled on the grid nodes."""
    return cubic_spline_profile(10.0 * np.abs(grid.nodes - 1.0 / 3.0))


def periodic_diffusion_matrix(grid: GridSpec1D, nu: float) -> sp.csr_matrix:
    """Circulant nu * (u_{j-1} - 2 u_j + u_{j+1}) / dx^2."""
    n = grid.n_points
    scale = nu / grid.spacing**2
    main = -2.0 * scale * np.ones(n)
    off = scale * np.ones(n - 1)
    matrix = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    matrix[0, n - 1] = scale
    matrix[n - 1, 0] = scale
    return matrix.tocsr()


def periodic_upwind_matrix(grid: GridSpec1D, c: float) -> sp.csr_matrix:
    """Circulant -c (u_j - u_{j-1}) / dx for c >= 0."""
    n = grid.n_points
    scale = c / grid.spacing
    matrix = sp.diags([scale * np.ones(n - 1), -scale * np.ones(n)], [-1, 0], format="lil")
    matrix[0, n - 1] = scale
    return matrix.tocsr()


class PeriodicModel(FullModel):
    """Common structure of the periodic benchmarks: grid, viscosity, cyclic CN solve."""

    field_names = ("u",)

    def __init__(self, grid: GridSpec1D, nu: float):
        if nu < 0:
            raise ModelConfigurationError(f"Viscosity must be non-negative, got {nu}", "nu")
        self.grid = grid
        self.nu = nu
        stiff = periodic_diffusion_matrix(grid, nu) if nu > 0 else None
        super().__init__(grid.n_points, cubic_spline_ic(grid), stiff)

    def implicit_solver(self, dt: float) -> Optional[ImplicitSolver]:
        if self.stiff_operator is None:
            return None
        if dt not in self._implicit_cache:
            n = self.grid.n_points
            r = 0.5 * dt * self.nu / self.grid.spacing**2
            lower = np.full(n, -r)
            upper = np.full(n, -r)
            diag = np.full(n, 1.0 + 2.0 * r)

            def solve(rhs: np.ndarray) -> np.ndarray:
                x, _ = solve_cyclic_tridiagonal(lower, diag, upper, rhs)
                return x

            self._implicit_cache[dt] = solve
        return self._implicit_cache[dt]

    def on_grid(self, grid: GridSpec1D) -> "PeriodicModel":
        """Same benchmark on another periodic grid."""
        raise NotImplementedError

    def coarsen(self, factor: int) -> "PeriodicModel":
        return self.on_grid(_coarse_grid(self.grid, factor))


class AdvectionDiffusionModel(PeriodicModel):
    """u_t = -c u_x + nu u_xx on the periodic unit interval."""

    name = "advection-diffusion"

    def __init__(self, grid: GridSpec1D, c: float, nu: float):
        if c < 0:
            raise ModelConfigurationError(f"Advection speed must be non-negative, got {c}", "c")
        self.c = c
        super().__init__(grid, nu)
        self.advection_operator = periodic_upwind_matrix(grid, c)

    def explicit_part(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.c == 0.0:
            return np.zeros_like(x)
        return -(self.c / self.grid.spacing) * (x - np.roll(x, 1))

    def cfl_number(self, x: np.ndarray, dt: float) -> float:
        return self.c * dt / self.grid.spacing

    def galerkin(self, phi: np.ndarray) -> Tuple[ExplicitClosure, np.ndarray]:
        reduced_advection = phi.T @ (self.advection_operator @ phi)
        reduced_stiff = phi.T @ self.stiff_apply_matrix(phi)

        def closure(t: float, z: np.ndarray) -> np.ndarray:
            return reduced_advection @ z

        return closure, reduced_stiff

    def on_grid(self, grid: GridSpec1D) -> "AdvectionDiffusionModel":
        return AdvectionDiffusionModel(grid, self.c, self.nu)


class BurgersModel(PeriodicModel):
    """u_t = -u u_x + nu u_xx with velocity-sign-aware first-order upwinding."""

    name = "burgers"

    def explicit_part(self, t: float, x: np.ndarray) -> np.ndarray:
        dx = self.grid.spacing
        backward = (x - np.roll(x, 1)) / dx
        forward = (np.roll(x, -1) - x) / dx
        return -x * np.where(x > 0.0, backward, forward)

    def cfl_number(self, x: np.ndarray, dt: float) -> float:
        return float(np.max(np.abs(x))) * dt / self.grid.spacing

    def on_grid(self, grid: GridSpec1D) -> "BurgersModel":
        return BurgersModel(grid, self.nu)


def _coarse_grid(grid: GridSpec1D, factor: int) -> GridSpec1D:
    if factor < 1 or grid.n_points % factor != 0:
        raise ModelConfigurationError(
            f"Coarsening factor {factor} does not divide {grid.n_points} points", "factor"
        )
    return GridSpec1D(grid.n_points // factor, grid.domain_length)


def make_advection_diffusion(grid: GridSpec1D, c: float, nu: float) -> AdvectionDiffusionModel:
    """
    Build the periodic advection-diffusion benchmark.

    Args:
        grid: Periodic grid
        c: Advection speed (>= 0)
        nu: Viscosity (>= 0)

    Returns:
        AdvectionDiffusionModel with the cubic-spline initial state
    """
    return AdvectionDiffusionModel(grid, c, nu)


def make_burgers(grid: GridSpec1D, nu: float) -> BurgersModel:
    """Build the periodic viscous Burgers benchmark with the cubic-spline initial state."""
    return BurgersModel(grid, nu)
