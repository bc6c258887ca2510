"""
Grid transfer between coarse and fine discretizations.

Periodic 1D states move between grids spectrally (Fourier truncation down, zero-padded
trigonometric interpolation up). Cavity states are injected down and bilinearly interpolated up.
"""

from typing import Optional, Union

import numpy as np
from scipy.fft import irfft, rfft
from scipy.interpolate import RegularGridInterpolator

from ..core.exceptions import ModelConfigurationError, ShapeMismatchError
from .base import CavitySpec, FullModel, GridSpec1D

Grid = Union[GridSpec1D, CavitySpec]


def fourier_filter(u: np.ndarray, n_modes: int) -> np.ndarray:
    """
    Keep the wavenumbers 0..n_modes-1 of a real periodic signal.

    Args:
        u: Samples on a uniform periodic grid
        n_modes: Number of lowest complex modes to keep (with their conjugates)

    Returns:
        np.ndarray: Low-pass filtered samples
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    if n_modes < 1 or n_modes > n // 2:
        raise ModelConfigurationError(
            f"n_modes must lie in [1, {n // 2}] for {n} points, got {n_modes}", "n_modes"
        )
    spectrum = rfft(u)
    spectrum[n_modes:] = 0.0
    return irfft(spectrum, n)


def _trigonometric_interpolation(u: np.ndarray, n_fine: int) -> np.ndarray:
    n_coarse = u.size
    if n_fine == n_coarse:
        return u.copy()
    spectrum = rfft(u)
    padded = np.zeros(n_fine // 2 + 1, dtype=complex)
    padded[: spectrum.size] = spectrum
    if n_coarse % 2 == 0:
        # Split the coarse Nyquist coefficient between +/- wavenumbers.
        padded[n_coarse // 2] *= 0.5
    return irfft(padded, n_fine) * (n_fine / n_coarse)


def _bilinear(fields: np.ndarray, coarse: CavitySpec, fine: CavitySpec) -> np.ndarray:
    interpolated = []
    fine_y, fine_x = np.meshgrid(fine.nodes, fine.nodes, indexing="ij")
    points = np.column_stack([fine_y.ravel(), fine_x.ravel()])
    for field in fields:
        interpolator = RegularGridInterpolator(
            (coarse.nodes, coarse.nodes), field.reshape(coarse.n_side, coarse.n_side)
        )
        interpolated.append(interpolator(points))
    return np.concatenate(interpolated)


def interpolate_to_fine(
    u_coarse: np.ndarray, coarse: Grid, fine: Grid, n_modes: Optional[int] = None
) -> np.ndarray:
    """
    Transfer a coarse state to a fine grid.

    Args:
        u_coarse: Coarse state vector
        coarse: Coarse grid (GridSpec1D or CavitySpec)
        fine: Fine grid of the same kind
        n_modes: For periodic grids, low-pass the coarse state to this many modes first

    Returns:
        np.ndarray: Fine state vector

    Raises:
        ModelConfigurationError: If the grids do not match (cavity grids must be nested)
    """
    u_coarse = np.asarray(u_coarse, dtype=float).reshape(-1)
    if isinstance(coarse, GridSpec1D) and isinstance(fine, GridSpec1D):
        if u_coarse.size != coarse.n_points:
            raise ShapeMismatchError("Coarse state size", coarse.n_points, u_coarse.size)
        if fine.n_points < coarse.n_points or fine.domain_length != coarse.domain_length:
            raise ModelConfigurationError(
                f"Cannot interpolate {coarse.n_points} -> {fine.n_points} points", "grid"
            )
        if n_modes is not None:
            u_coarse = fourier_filter(u_coarse, min(n_modes, coarse.n_points // 2))
        return _trigonometric_interpolation(u_coarse, fine.n_points)
    if isinstance(coarse, CavitySpec) and isinstance(fine, CavitySpec):
        if u_coarse.size != coarse.dim:
            raise ShapeMismatchError("Coarse state size", coarse.dim, u_coarse.size)
        if (fine.n_side - 1) % (coarse.n_side - 1) != 0:
            raise ModelConfigurationError(
                f"Incommensurate grids: {coarse.n_side} -> {fine.n_side} per side", "grid"
            )
        if fine.n_side == coarse.n_side:
            return u_coarse.copy()
        return _bilinear(u_coarse.reshape(2, -1), coarse, fine)
    raise ModelConfigurationError("Grids must be of the same kind", "grid")


def restrict_to_coarse(u_fine: np.ndarray, fine: Grid, coarse: Grid) -> np.ndarray:
    """
    Transfer a fine state to a coarser grid.

    Periodic states keep their lowest coarse-resolvable Fourier modes; cavity fields are
    injected at the shared nodes.
    """
    u_fine = np.asarray(u_fine, dtype=float).reshape(-1)
    if isinstance(fine, GridSpec1D) and isinstance(coarse, GridSpec1D):
        if fine.n_points < coarse.n_points:
            raise ModelConfigurationError("Coarse grid is finer than the fine grid", "grid")
        if fine.n_points == coarse.n_points:
            return u_fine.copy()
        n_coarse = coarse.n_points
        spectrum = rfft(u_fine)[: n_coarse // 2 + 1].copy()
        if n_coarse % 2 == 0:
            spectrum[-1] = spectrum[-1].real
        return irfft(spectrum, n_coarse) * (n_coarse / fine.n_points)
    if isinstance(fine, CavitySpec) and isinstance(coarse, CavitySpec):
        if (fine.n_side - 1) % (coarse.n_side - 1) != 0:
            raise ModelConfigurationError("Incommensurate grids", "grid")
        stride = (fine.n_side - 1) // (coarse.n_side - 1)
        fields = u_fine.reshape(2, fine.n_side, fine.n_side)[:, ::stride, ::stride]
        return fields.reshape(-1).copy()
    raise ModelConfigurationError("Grids must be of the same kind", "grid")


def grid_of(model: FullModel) -> Grid:
    """Grid description carried by a benchmark model."""
    grid = getattr(model, "grid", None) or getattr(model, "spec", None)
    if grid is None:
        raise ModelConfigurationError(f"Model '{model.name}' has no grid", "model")
    return grid


def make_coarse_model(fine: FullModel, coarsening: int) -> FullModel:
    """
    Build the same benchmark on a grid coarser by ``coarsening``.

    The matching coarse time step is ``coarsening`` times the fine one (see coarse_time_step).

    Raises:
        ModelConfigurationError: If the factor does not divide the grid
    """
    if coarsening == 1:
        return fine
    coarsen = getattr(fine, "coarsen", None)
    if coarsen is None:
        raise ModelConfigurationError(f"Model '{fine.name}' cannot be coarsened", "coarsening")
    return coarsen(coarsening)


def periodic_coarse_model(fine: FullModel, n_points: int) -> FullModel:
    """
    Build a periodic benchmark on a coarse grid with any number of points.

    Raises:
        ModelConfigurationError: If the model is not periodic or the grid is not coarser
    """
    grid = getattr(fine, "grid", None)
    on_grid = getattr(fine, "on_grid", None)
    if not isinstance(grid, GridSpec1D) or on_grid is None:
        raise ModelConfigurationError(f"Model '{fine.name}' is not periodic", "coarse_points")
    if not 4 <= n_points <= grid.n_points:
        raise ModelConfigurationError(
            f"Coarse grid needs 4..{grid.n_points} points, got {n_points}", "coarse_points"
        )
    return on_grid(GridSpec1D(n_points, grid.domain_length))


def coarse_time_step(dt: float, coarsening: float) -> float:
    """Coarse unit step proportional to the grid coarsening."""
    return dt * coarsening
