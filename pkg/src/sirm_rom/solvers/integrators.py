"""
IMEX time integration for full and reduced models.

The explicit part is advanced by the two-step Adams-Bashforth scheme, bootstrapped by one
forward-Euler step, and the stiff part by Crank-Nicolson:

    x_{k+1} = x_k + dt (3/2 g_k - 1/2 g_{k-1}) + dt/2 L (x_{k+1} + x_k)
"""

import logging
import warnings
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, List, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..core.exceptions import (
    CflWarning,
    LinearSolveError,
    ModelConfigurationError,
    NonFiniteStateError,
    ShapeMismatchError,
)
from ..models.base import FullModel, Trajectory
from ..utils.validators import validate_step_alignment

if TYPE_CHECKING:
    from ..rom.basis import Basis
    from ..rom.reduced import ReducedModel

logger = logging.getLogger(__name__)

SCHEMES = ("imex_ab2_cn",)


@dataclass(frozen=True)
class IntegratorConfig:
    """Time span, unit step and snapshot stride of one integration."""

    dt: float
    t_end: float
    t_start: float = 0.0
    record_every: int = 1
    scheme: str = "imex_ab2_cn"

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ModelConfigurationError(f"Unknown scheme '{self.scheme}'", "scheme")
        if self.dt <= 0:
            raise ModelConfigurationError(f"Time step must be positive, got {self.dt}", "dt")
        if self.t_end <= self.t_start:
            raise ModelConfigurationError("t_end must exceed t_start", "t_end")
        if self.record_every < 1:
            raise ModelConfigurationError("record_every must be at least 1", "record_every")
        if not validate_step_alignment(self.t_end, self.dt, self.t_start):
            steps = (self.t_end - self.t_start) / self.dt
            raise ModelConfigurationError(
                f"(t_end - t_start)/dt = {steps} is not an integer", "dt"
            )

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt))

    def step_time(self, k: int) -> float:
        return self.t_start + k * self.dt

    def with_span(self, t_start: float, t_end: float, **changes: object) -> "IntegratorConfig":
        """Copy of this config over another time span."""
        return replace(self, t_start=t_start, t_end=t_end, **changes)  # type: ignore[arg-type]


def _check_finite(x: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(f"Non-finite state at t = {t:.6g}", time=t)


def _warn_cfl(model: FullModel, x: np.ndarray, dt: float, t: float) -> bool:
    cfl = model.cfl_number(x, dt)
    if cfl > 1.0:
        message = f"CFL number {cfl:.3f} exceeds 1 at t = {t:.6g} for {model.name}"
        logger.warning(f"⚠️ {message}")
        warnings.warn(message, CflWarning, stacklevel=3)
        return True
    return False


def integrate_full(
    model: FullModel, cfg: IntegratorConfig, x0: Optional[np.ndarray] = None
) -> Trajectory:
    """
    Integrate a full model with the IMEX AB2/CN scheme.

    Args:
        model: Full-order model
        cfg: Integrator configuration
        x0: Optional start state (default: model.initial_state)

    Returns:
        Trajectory: States every ``record_every`` steps plus the final state

    Raises:
        NonFiniteStateError: If the state blows up
        LinearSolveError: If an implicit solve breaks down
    """
    x_start = model.initial_state if x0 is None else np.asarray(x0, dtype=float).copy()
    if x_start.shape != (model.dim,):
        raise ShapeMismatchError("Start state has the wrong shape", (model.dim,), x_start.shape)
    solve = model.implicit_solver(cfg.dt)
    dt = cfg.dt

    times: List[float] = [cfg.t_start]
    states: List[np.ndarray] = [x_start.copy()]
    x = model.constrain(x_start)
    warned = _warn_cfl(model, x, dt, cfg.t_start)
    g_prev: Optional[np.ndarray] = None

    for k in range(cfg.n_steps):
        t = cfg.step_time(k)
        g = model.step_explicit_part(t, x)
        advance = g if g_prev is None else 1.5 * g - 0.5 * g_prev
        rhs = x + dt * advance
        if solve is not None:
            rhs = rhs + 0.5 * dt * model.stiff_apply(x)
            try:
                x_next = solve(rhs)
            except (RuntimeError, ValueError, np.linalg.LinAlgError) as e:
                raise LinearSolveError(f"Implicit step failed at t = {t:.6g}: {e}") from e
        else:
            x_next = rhs
        x_next = model.constrain(x_next)
        t_next = cfg.step_time(k + 1)
        _check_finite(x_next, t_next)
        if not warned:
            warned = _warn_cfl(model, x_next, dt, t_next)

        if (k + 1) % cfg.record_every == 0 or k + 1 == cfg.n_steps:
            times.append(t_next)
            states.append(x_next.copy())
        g_prev = g
        x = x_next

    logger.debug(f"Integrated {model.name} over {cfg.n_steps} steps")
    return Trajectory(np.array(times), np.column_stack(states))


def integrate_reduced(
    basis: Optional["Basis"],
    model: Optional[FullModel],
    z0: np.ndarray,
    cfg: IntegratorConfig,
    reduced: Optional["ReducedModel"] = None,
) -> Trajectory:
    """
    Integrate the Galerkin reduced model with the scheme inherited from the full model.

    Args:
        basis: Column-orthonormal basis (ignored when ``reduced`` is given)
        model: Full model to project (ignored when ``reduced`` is given)
        z0: Reduced start state of length k
        cfg: Integrator configuration
        reduced: Prebuilt reduced model

    Returns:
        Trajectory: Reduced coordinates (k x samples)
    """
    if reduced is None:
        from ..rom.reduced import build_reduced_model

        if basis is None or model is None:
            raise ModelConfigurationError("Need a basis and a model or a reduced model")
        reduced = build_reduced_model(basis, model)

    z = np.asarray(z0, dtype=float).reshape(-1)
    if z.size != reduced.k:
        raise ShapeMismatchError("Reduced start state has the wrong length", reduced.k, z.size)
    dt = cfg.dt
    k_dim = reduced.k
    stiff = reduced.stiff
    has_stiff = bool(np.any(stiff))
    if has_stiff:
        try:
            factor = lu_factor(np.eye(k_dim) - 0.5 * dt * stiff)
        except (ValueError, np.linalg.LinAlgError) as e:
            raise LinearSolveError(f"Reduced implicit matrix factorization failed: {e}") from e

    times: List[float] = [cfg.t_start]
    states: List[np.ndarray] = [z.copy()]
    g_prev: Optional[np.ndarray] = None
    for k in range(cfg.n_steps):
        t = cfg.step_time(k)
        g = reduced.explicit(t, z)
        advance = g if g_prev is None else 1.5 * g - 0.5 * g_prev
        rhs = z + dt * advance
        if has_stiff:
            z_next = lu_solve(factor, rhs + 0.5 * dt * (stiff @ z))
        else:
            z_next = rhs
        t_next = cfg.step_time(k + 1)
        _check_finite(z_next, t_next)
        if (k + 1) % cfg.record_every == 0 or k + 1 == cfg.n_steps:
            times.append(t_next)
            states.append(z_next.copy())
        g_prev = g
        z = z_next

    return Trajectory(np.array(times), np.column_stack(states))
