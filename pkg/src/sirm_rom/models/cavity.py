"""
Lid-driven cavity in stream function-vorticity form.

The state stacks the stream function and the vorticity, each stored row-major over the
``n_side`` x ``n_side`` node grid (flat index ``j * n_side + i`` with ``x = i h``, ``y = j h``);
the moving lid is the top row ``j = n_side - 1``, corners included. The Poisson equation
psi_xx + psi_yy = -omega and Thom's wall closure are enforced as constraints, so the model is a
self-contained ODE in [psi; omega]:

- vorticity interior rows: -psi_y omega_x + psi_x omega_y + (1/Re) Delta omega
- stream-function rows: the matching psi_t from the Poisson constraint
- wall vorticity rows: the time derivative of Thom's closure
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..core.exceptions import ModelConfigurationError
from ..solvers.linear import poisson_matrix, solve_poisson
from .base import CavitySpec, ExplicitClosure, FullModel, ImplicitSolver

logger = logging.getLogger(__name__)

MIN_N_SIDE = 17


@dataclass(frozen=True)
class WallVorticity:
    """Wall vorticity per wall; bottom/top span all columns, left/right the interior rows."""

    bottom: np.ndarray
    top: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def apply(self, omega: np.ndarray) -> np.ndarray:
        """Write the wall values into an n_side x n_side vorticity field (copy)."""
        field = np.array(omega, dtype=float, copy=True)
        field[0, :] = self.bottom
        field[-1, :] = self.top
        field[1:-1, 0] = self.left
        field[1:-1, -1] = self.right
        return field


def thom_boundary(psi: np.ndarray, spec: CavitySpec) -> WallVorticity:
    """
    Thom's closure omega_B = -2 psi_{B-1} / h^2 - U / h, with U = lid_speed on the lid only.

    Args:
        psi: Stream function, n_side x n_side or flattened, zero on the walls
        spec: Cavity description

    Returns:
        WallVorticity on the four walls
    """
    n = spec.n_side
    field = np.asarray(psi, dtype=float).reshape(n, n)
    scale = -2.0 / spec.h**2
    return WallVorticity(
        bottom=scale * field[1, :],
        top=scale * field[n - 2, :] - spec.lid_speed / spec.h,
        left=scale * field[1:-1, 1],
        right=scale * field[1:-1, n - 2],
    )


def _central_derivatives(fields: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Central x and y derivatives at interior nodes of fields shaped (n, n, ...)."""
    dx = (fields[1:-1, 2:] - fields[1:-1, :-2]) / (2.0 * h)
    dy = (fields[2:, 1:-1] - fields[:-2, 1:-1]) / (2.0 * h)
    return dx, dy


class CavityModel(FullModel):
    """Stream function-vorticity cavity with second-order central differences."""

    name = "cavity"
    field_names = ("psi", "omega")

    def __init__(self, spec: CavitySpec):
        self.spec = spec
        n = spec.n_side
        self.n_side = n
        self.n_nodes = n * n
        self.n_interior = n - 2
        h = spec.h

        jj, ii = np.meshgrid(np.arange(1, n - 1), np.arange(1, n - 1), indexing="ij")
        self.interior = (jj * n + ii).ravel()
        wall_mask = np.ones((n, n), dtype=bool)
        wall_mask[1:-1, 1:-1] = False
        self.boundary = np.flatnonzero(wall_mask)

        bj, bi = np.divmod(self.boundary, n)
        nj = np.where(bj == 0, 1, np.where(bj == n - 1, n - 2, bj))
        ni = np.where((bj == 0) | (bj == n - 1), bi, np.where(bi == 0, 1, n - 2))
        rows = np.arange(self.boundary.size)
        thom = sp.csr_matrix(
            (np.full(self.boundary.size, -2.0 / h**2), (rows, nj * n + ni)),
            shape=(self.boundary.size, self.n_nodes),
        )
        self.thom_interior = thom[:, self.interior].tocsr()
        self.thom_bias = np.where(bj == n - 1, -spec.lid_speed / h, 0.0)

        rows = np.repeat(np.arange(self.interior.size), 5)
        offsets = np.array([0, 1, -1, n, -n])
        cols = (self.interior[:, None] + offsets[None, :]).ravel()
        weights = np.tile(np.array([-4.0, 1.0, 1.0, 1.0, 1.0]) / h**2, self.interior.size)
        self.laplacian = sp.csr_matrix(
            (weights, (rows, cols)), shape=(self.interior.size, self.n_nodes)
        )
        self.laplacian_walls = self.laplacian[:, self.boundary].tocsr()
        self.poisson = poisson_matrix(self.n_interior, h)

        coo = (self.laplacian / spec.reynolds).tocoo()
        stiff = sp.csr_matrix(
            (coo.data, (self.n_nodes + self.interior[coo.row], self.n_nodes + coo.col)),
            shape=(2 * self.n_nodes, 2 * self.n_nodes),
        )
        super().__init__(2 * self.n_nodes, np.zeros(2 * self.n_nodes), stiff)

    # Layout helpers

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Views of the stream-function and vorticity blocks of a state."""
        return x[: self.n_nodes], x[self.n_nodes :]

    def stream_function(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x[: self.n_nodes]).reshape(self.n_side, self.n_side)

    def vorticity(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x[self.n_nodes :]).reshape(self.n_side, self.n_side)

    def field_slices(self) -> List[slice]:
        return [slice(0, self.n_nodes), slice(self.n_nodes, 2 * self.n_nodes)]

    def _solve_stream(self, rhs: np.ndarray, x0: Optional[np.ndarray] = None) -> np.ndarray:
        solution, _ = solve_poisson(
            rhs,
            self.poisson,
            self.n_interior,
            self.spec.h,
            tol=self.spec.poisson_tol,
            preconditioner=self.spec.poisson_preconditioner,
            x0=x0,
        )
        return solution

    def _solve_stream_columns(self, rhs: np.ndarray) -> np.ndarray:
        return np.column_stack([self._solve_stream(rhs[:, a]) for a in range(rhs.shape[1])])

    def _advection(self, psi: np.ndarray, omega: np.ndarray) -> np.ndarray:
        n = self.n_side
        psi_x, psi_y = _central_derivatives(psi.reshape(n, n), self.spec.h)
        omega_x, omega_y = _central_derivatives(omega.reshape(n, n), self.spec.h)
        return (-psi_y * omega_x + psi_x * omega_y).ravel()

    # FullModel interface

    def constrain(self, x: np.ndarray) -> np.ndarray:
        """Recompute psi from the interior vorticity and close the walls with Thom's formula."""
        psi, omega = self.split(x)
        warm = psi[self.interior]
        psi_interior = self._solve_stream(omega[self.interior], warm if np.any(warm) else None)
        out = np.zeros(self.dim)
        out[self.interior] = psi_interior
        out[self.n_nodes :] = omega
        out[self.n_nodes + self.boundary] = self.thom_interior @ psi_interior + self.thom_bias
        return out

    def explicit_part(self, t: float, x: np.ndarray) -> np.ndarray:
        constrained = self.constrain(x)
        psi_c, omega_c = self.split(constrained)
        advection = self._advection(psi_c, omega_c)
        diffusion = (self.laplacian @ omega_c) / self.spec.reynolds
        psi_rate = self._solve_stream(advection + diffusion)

        out = np.zeros(self.dim)
        out[self.interior] = psi_rate
        # Offsets the stiff term on the raw state so the total field is evaluated at the
        # constrained state.
        out[self.n_nodes + self.interior] = (
            advection + diffusion - (self.laplacian @ x[self.n_nodes :]) / self.spec.reynolds
        )
        out[self.n_nodes + self.boundary] = self.thom_interior @ psi_rate
        return out

    def step_explicit_part(self, t: float, x: np.ndarray) -> np.ndarray:
        psi, omega = self.split(x)
        out = np.zeros(self.dim)
        out[self.n_nodes + self.interior] = self._advection(psi, omega)
        return out

    def implicit_solver(self, dt: float) -> Optional[ImplicitSolver]:
        if dt not in self._implicit_cache:
            weight = 0.5 * dt / self.spec.reynolds
            system = (sp.identity(self.interior.size, format="csc") + weight * self.poisson).tocsc()
            factor = splu(system)
            rows = self.n_nodes + self.interior
            walls = self.n_nodes + self.boundary

            def solve(rhs: np.ndarray) -> np.ndarray:
                out = np.array(rhs, dtype=float, copy=True)
                out[rows] = factor.solve(rhs[rows] + weight * (self.laplacian_walls @ rhs[walls]))
                return out

            self._implicit_cache[dt] = solve
        return self._implicit_cache[dt]

    def cfl_number(self, x: np.ndarray, dt: float) -> float:
        psi_x, psi_y = _central_derivatives(self.stream_function(x), self.spec.h)
        interior_cfl = float(np.max(np.abs(psi_y) + np.abs(psi_x))) if psi_x.size else 0.0
        return max(interior_cfl, abs(self.spec.lid_speed)) * dt / self.spec.h

    def galerkin(self, phi: np.ndarray) -> Tuple[ExplicitClosure, np.ndarray]:
        """
        Galerkin projection with the constraint eliminated in closed form.

        The constrained state is affine in z, so the projected field splits into a quadratic
        advection tensor, linear and constant terms, and a linear diffusion operator. Building
        it costs 2k Poisson solves; each reduced step is then independent of the grid size.
        """
        n, h, k = self.n_side, self.spec.h, phi.shape[1]
        phi_psi, phi_omega = phi[: self.n_nodes], phi[self.n_nodes :]
        phi_omega_interior = phi_omega[self.interior]

        stream = self._solve_stream_columns(phi_omega_interior)
        omega_columns = np.zeros((self.n_nodes, k))
        omega_columns[self.interior] = phi_omega_interior
        omega_columns[self.boundary] = self.thom_interior @ stream
        omega_bias = np.zeros(self.n_nodes)
        omega_bias[self.boundary] = self.thom_bias

        test = (
            self._solve_stream_columns(
                phi_psi[self.interior] + self.thom_interior.T @ phi_omega[self.boundary]
            )
            + phi_omega_interior
        )

        stream_fields = np.zeros((self.n_nodes, k))
        stream_fields[self.interior] = stream
        psi_x, psi_y = _central_derivatives(stream_fields.reshape(n, n, k), h)
        psi_x, psi_y = psi_x.reshape(-1, k), psi_y.reshape(-1, k)
        omega_x, omega_y = _central_derivatives(omega_columns.reshape(n, n, k), h)
        omega_x, omega_y = omega_x.reshape(-1, k), omega_y.reshape(-1, k)
        bias_x, bias_y = _central_derivatives(omega_bias.reshape(n, n), h)
        bias_x, bias_y = bias_x.ravel(), bias_y.ravel()

        quadratic = np.empty((k, k, k))
        for a in range(k):
            products = -psi_y[:, a, None] * omega_x + psi_x[:, a, None] * omega_y
            quadratic[:, a, :] = test.T @ products
        linear = test.T @ (-psi_y * bias_x[:, None] + psi_x * bias_y[:, None])
        constant = test.T @ (self.laplacian @ omega_bias) / self.spec.reynolds
        reduced_stiff = test.T @ (self.laplacian @ omega_columns) / self.spec.reynolds

        def closure(t: float, z: np.ndarray) -> np.ndarray:
            return np.einsum("cab,a,b->c", quadratic, z, z) + linear @ z + constant

        return closure, reduced_stiff

    def coarsen(self, factor: int) -> "CavityModel":
        if factor < 1 or (self.n_side - 1) % factor != 0:
            raise ModelConfigurationError(
                f"Coarsening factor {factor} does not divide {self.n_side - 1} intervals", "factor"
            )
        n_side = (self.n_side - 1) // factor + 1
        if n_side < MIN_N_SIDE:
            raise ModelConfigurationError(
                f"Coarsening by {factor} leaves {n_side} points per side, below {MIN_N_SIDE}",
                "factor",
            )
        return CavityModel(replace(self.spec, n_side=n_side))

    # Diagnostics

    def centerline_velocities(
        self, x: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Velocity profiles through the cavity centre.

        Returns:
            Tuple (y, u(0.5, y), x, v(x, 0.5)) with u = psi_y and v = -psi_x
        """
        n, h = self.n_side, self.spec.h
        psi = self.stream_function(x)
        nodes = self.spec.nodes
        middle = (n - 1) / 2.0
        lo, hi = int(np.floor(middle)), int(np.ceil(middle))

        column = 0.5 * (psi[:, lo] + psi[:, hi])
        u = np.zeros(n)
        u[1:-1] = (column[2:] - column[:-2]) / (2.0 * h)
        u[-1] = self.spec.lid_speed

        row = 0.5 * (psi[lo, :] + psi[hi, :])
        v = np.zeros(n)
        v[1:-1] = -(row[2:] - row[:-2]) / (2.0 * h)
        return nodes, u, nodes, v


def make_cavity(spec: CavitySpec) -> CavityModel:
    """
    Build the lid-driven cavity model.

    Args:
        spec: Cavity description (n_side >= 17)

    Returns:
        CavityModel with the quiescent initial state psi = omega = 0
    """
    if spec.n_side < MIN_N_SIDE:
        raise ModelConfigurationError(
            f"Cavity needs n_side >= {MIN_N_SIDE}, got {spec.n_side}", "n_side"
        )
    return CavityModel(spec)
