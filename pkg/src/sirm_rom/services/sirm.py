"""
Subspace iteration using reduced models (SIRM).

Each iteration samples the current approximate trajectory, pairs the snapshots with their
tangent vectors, extracts a basis, and integrates the Galerkin reduced model from the projected
initial state. The lifted result is the next approximation. Iteration stops once successive
approximations agree to within epsilon on the sample times.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..core.config import config
from ..core.exceptions import (
    ModelConfigurationError,
    NonFiniteStateError,
    SirmDivergenceError,
)
from ..models.base import FullModel, Trajectory
from ..models.transfer import (
    coarse_time_step,
    grid_of,
    interpolate_to_fine,
    make_coarse_model,
    periodic_coarse_model,
    restrict_to_coarse,
)
from ..rom.basis import (
    Basis,
    EnergyCriterion,
    InformationMatrix,
    assemble_information_matrix,
    gram_schmidt_basis,
    lift,
    pod_basis,
    project,
    truncation_error_estimate,
)
from ..rom.reduced import build_reduced_model
from ..solvers.integrators import IntegratorConfig, integrate_full, integrate_reduced
from ..utils.helpers import DistanceSeries, distance_series, sup_l2_distance

logger = logging.getLogger(__name__)

TRIAL_KINDS = ("constant_ic", "coarse_model", "supplied_trajectory")
BASIS_METHODS = ("pod", "gram_schmidt")


@dataclass(frozen=True)
class TrialSpec:
    """How the iteration's first approximate trajectory is produced."""

    kind: str = "constant_ic"
    coarse_factor: Optional[int] = None
    coarse_points: Optional[int] = None
    coarse_dt: Optional[float] = None
    fourier_modes: Optional[int] = None
    trajectory: Optional[Trajectory] = None

    def __post_init__(self) -> None:
        if self.kind not in TRIAL_KINDS:
            raise ModelConfigurationError(f"Unknown trial kind '{self.kind}'", "trial")
        has_coarse = self.coarse_factor is not None or self.coarse_points is not None
        if has_coarse != (self.kind == "coarse_model"):
            raise ModelConfigurationError(
                "Coarse parameters are required for, and only for, coarse_model trials", "trial"
            )
        if self.kind == "supplied_trajectory" and self.trajectory is None:
            raise ModelConfigurationError("supplied_trajectory needs a trajectory", "trial")


@dataclass(frozen=True)
class SirmConfig:
    """Settings of the SIRM fixed-point loop."""

    criterion: EnergyCriterion
    m: int
    epsilon: float
    max_iterations: int = config.SIRM_MAX_ITERATIONS
    gamma: float = config.DEFAULT_GAMMA
    trial: TrialSpec = field(default_factory=TrialSpec)
    reduced_dt: Optional[float] = None
    ensemble: str = "states_and_tangents"
    split_fields: bool = False
    basis_method: str = "pod"
    drop_tol: float = config.GRAM_SCHMIDT_DROP_TOL
    divergence_factor: float = config.DIVERGENCE_FACTOR
    divergence_window: int = config.DIVERGENCE_WINDOW

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ModelConfigurationError(f"Need at least 2 snapshots, got {self.m}", "m")
        if self.epsilon <= 0:
            raise ModelConfigurationError("epsilon must be positive", "epsilon")
        if self.max_iterations < 1:
            raise ModelConfigurationError("max_iterations must be at least 1", "max_iterations")
        if self.basis_method not in BASIS_METHODS:
            raise ModelConfigurationError(
                f"Unknown basis method '{self.basis_method}'", "basis_method"
            )


@dataclass
class IterationRecord:
    """Diagnostics of one SIRM iteration."""

    iteration: int
    k: int
    truncation_estimate: float
    successive_diff: float
    true_error: Optional[float]
    wall_time: float
    energy_fraction: float = 1.0


@dataclass
class ConvergenceReport:
    """Per-iteration records plus the sampled iterates (index 0 is the trial)."""

    sample_times: np.ndarray
    records: List[IterationRecord] = field(default_factory=list)
    sample_trajectories: List[Trajectory] = field(default_factory=list)
    singular_values: List[np.ndarray] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_k(self) -> int:
        return self.records[-1].k if self.records else 0

    @property
    def k_series(self) -> List[int]:
        return [record.k for record in self.records]

    def true_errors(self) -> List[Optional[float]]:
        return [record.true_error for record in self.records]


@dataclass
class IterationOutcome:
    """Result of one reduced solve: new samples, the basis used and the reduced trajectory."""

    samples: Trajectory
    basis: Basis
    reduced_trajectory: Trajectory


def build_basis(Y: InformationMatrix, cfg: SirmConfig) -> Basis:
    """Extract the iteration basis with the configured method."""
    if cfg.basis_method == "gram_schmidt":
        return gram_schmidt_basis(Y, cfg.drop_tol)
    return pod_basis(Y, cfg.criterion)


def reduced_integrator(cfg: SirmConfig, integ: IntegratorConfig) -> IntegratorConfig:
    """Integrator config of the reduced solve over the same span."""
    return replace(integ, dt=cfg.reduced_dt or integ.dt, record_every=1)


def lift_samples(
    model: FullModel, basis: Basis, reduced: Trajectory, times: np.ndarray, x_start: np.ndarray
) -> Trajectory:
    """Lift reduced coordinates at the given times, constrain them and pin the start state."""
    states = lift(basis, reduced.sample(times).states)
    for i in range(1, states.shape[1]):
        states[:, i] = model.constrain(states[:, i])
    states[:, 0] = x_start
    return Trajectory(times, states)


def sirm_iteration(
    model: FullModel,
    samples: Trajectory,
    x_start: np.ndarray,
    cfg: SirmConfig,
    integ: IntegratorConfig,
) -> IterationOutcome:
    """
    One SIRM step on the window spanned by ``samples``.

    Args:
        model: Full model
        samples: Current approximation at the sample times
        x_start: State at the window start
        cfg: SIRM settings
        integ: Integrator config over the window

    Returns:
        IterationOutcome with the refined samples
    """
    ensemble = assemble_information_matrix(
        samples, model, cfg.gamma, cfg.ensemble, cfg.split_fields
    )
    basis = build_basis(ensemble, cfg)
    reduced = build_reduced_model(basis, model)
    trajectory = integrate_reduced(
        None, None, project(basis, x_start), reduced_integrator(cfg, integ), reduced=reduced
    )
    refined = lift_samples(model, basis, trajectory, samples.times, x_start)
    return IterationOutcome(samples=refined, basis=basis, reduced_trajectory=trajectory)


def _constant_trial(times: np.ndarray, x_start: np.ndarray) -> Trajectory:
    return Trajectory(times, np.repeat(x_start[:, None], times.size, axis=1))


def coarse_trial(
    model: FullModel,
    trial: TrialSpec,
    integ: IntegratorConfig,
    times: np.ndarray,
    x_start: np.ndarray,
) -> Trajectory:
    """
    Trial from the same scheme on a coarser grid with a proportionally longer step.

    The fine start state is restricted to the coarse grid, the coarse run is sampled at
    ``times`` by linear interpolation, and each sample is low-pass filtered and lifted back.
    """
    if trial.coarse_points is not None:
        coarse = periodic_coarse_model(model, trial.coarse_points)
        ratio = model.dim / coarse.dim
    else:
        coarse = make_coarse_model(model, int(trial.coarse_factor or 1))
        ratio = float(trial.coarse_factor or 1)
    coarse_dt = trial.coarse_dt or coarse_time_step(integ.dt, ratio)
    fine_grid, coarse_grid = grid_of(model), grid_of(coarse)
    coarse_start = restrict_to_coarse(x_start, fine_grid, coarse_grid)
    coarse_cfg = IntegratorConfig(dt=coarse_dt, t_start=integ.t_start, t_end=integ.t_end)
    coarse_run = integrate_full(coarse, coarse_cfg, x0=coarse_start).sample(times)
    states = np.column_stack(
        [
            model.constrain(
                interpolate_to_fine(column, coarse_grid, fine_grid, trial.fourier_modes)
            )
            for column in coarse_run.states.T
        ]
    )
    states[:, 0] = x_start
    return Trajectory(times, states)


def build_trial(
    model: FullModel,
    trial: TrialSpec,
    integ: IntegratorConfig,
    times: np.ndarray,
    x_start: np.ndarray,
) -> Trajectory:
    """Approximate trajectory at ``times`` that starts the iteration."""
    if trial.kind == "constant_ic":
        return _constant_trial(times, x_start)
    if trial.kind == "supplied_trajectory":
        assert trial.trajectory is not None
        supplied = trial.trajectory.sample(times)
        states = supplied.states.copy()
        states[:, 0] = x_start
        return Trajectory(times, states)
    return coarse_trial(model, trial, integ, times, x_start)


def check_divergence(history: List[float], cfg: SirmConfig, iteration: int) -> None:
    window = cfg.divergence_window
    if len(history) <= window:
        return
    recent = history[-(window + 1) :]
    growing = all(b > a for a, b in zip(recent[:-1], recent[1:]))
    if growing and recent[-1] > cfg.divergence_factor * recent[0]:
        raise SirmDivergenceError(iteration, list(history))


def iterate(
    model: FullModel,
    trial: Trajectory,
    x_start: np.ndarray,
    cfg: SirmConfig,
    integ: IntegratorConfig,
    reference: Optional[Trajectory] = None,
    report: Optional[ConvergenceReport] = None,
    log: Callable[[str], None] = logger.info,
) -> Tuple[IterationOutcome, ConvergenceReport]:
    """
    Run SIRM iterations from a trial until convergence or the iteration cap.

    Args:
        model: Full model
        trial: Trial samples (first column equals x_start)
        x_start: State at the window start
        cfg: SIRM settings
        integ: Integrator config over the window
        reference: Optional reference trajectory for true-error diagnostics
        report: Report to append to (created when omitted)
        log: Logging callable for per-iteration lines

    Returns:
        Tuple of the last IterationOutcome and the ConvergenceReport
    """
    if report is None:
        report = ConvergenceReport(sample_times=trial.times)
    report.sample_trajectories.append(trial)
    samples = trial
    history: List[float] = []
    outcome: Optional[IterationOutcome] = None

    for iteration in range(1, cfg.max_iterations + 1):
        started = time.perf_counter()
        try:
            outcome = sirm_iteration(model, samples, x_start, cfg, integ)
        except NonFiniteStateError as e:
            raise NonFiniteStateError(
                f"Non-finite state in SIRM iteration {iteration}: {e}", iteration, e.time
            ) from e
        if not np.all(np.isfinite(outcome.samples.states)):
            raise NonFiniteStateError(f"Non-finite state in SIRM iteration {iteration}", iteration)

        diff = sup_l2_distance(outcome.samples.states, samples.states)
        true_error = None
        if reference is not None:
            true_error = distance_series(outcome.samples, reference).sup
        basis = outcome.basis
        record = IterationRecord(
            iteration=iteration,
            k=basis.k,
            truncation_estimate=truncation_error_estimate(basis.singular_values, basis.k),
            successive_diff=diff,
            true_error=true_error,
            wall_time=time.perf_counter() - started,
            energy_fraction=basis.energy_fraction,
        )
        report.records.append(record)
        report.sample_trajectories.append(outcome.samples)
        report.singular_values.append(basis.singular_values)
        error_text = "" if true_error is None else f", error {true_error:.3e}"
        log(f"🔁 Iteration {iteration}: k = {basis.k}, successive diff {diff:.3e}{error_text}")

        history.append(diff)
        samples = outcome.samples
        if diff < cfg.epsilon:
            report.converged = True
            break
        check_divergence(history, cfg, iteration)

    assert outcome is not None
    return outcome, report


def sirm_solve(
    model: FullModel,
    cfg: SirmConfig,
    integ: IntegratorConfig,
    reference: Optional[Trajectory] = None,
) -> Tuple[Trajectory, ConvergenceReport]:
    """
    Global SIRM over the whole integration span.

    Args:
        model: Full model
        cfg: SIRM settings
        integ: Integrator config (span, unit step, record stride of the returned trajectory)
        reference: Optional full-model reference for true-error diagnostics

    Returns:
        Tuple of the last iterate (recorded every ``integ.record_every`` steps) and the report
    """
    x0 = model.initial_state
    times = np.linspace(integ.t_start, integ.t_end, cfg.m)
    logger.info(
        f"🚀 SIRM on {model.name} (n = {model.dim}, m = {cfg.m}, trial {cfg.trial.kind})"
    )
    trial = build_trial(model, cfg.trial, integ, times, x0)
    outcome, report = iterate(model, trial, x0, cfg, integ, reference)

    record_steps = list(range(0, integ.n_steps + 1, integ.record_every))
    if record_steps[-1] != integ.n_steps:
        record_steps.append(integ.n_steps)
    record_times = np.array([integ.step_time(k) for k in record_steps])
    final = lift_samples(model, outcome.basis, outcome.reduced_trajectory, record_times, x0)

    status = "✅ converged" if report.converged else "⚠️ stopped at the iteration cap"
    logger.info(f"{status} after {report.iterations} iterations (k = {report.final_k})")
    return final, report


def posterior_error(trial_traj: Trajectory, refined_traj: Trajectory) -> DistanceSeries:
    """
    Distance between successive iterates, a computable surrogate of the true error.

    Args:
        trial_traj: Iterate j
        refined_traj: Iterate j + 1

    Returns:
        DistanceSeries with ``values`` over time and ``sup`` over the samples

    Raises:
        TimeRangeError: If the time ranges are disjoint
    """
    return distance_series(trial_traj, refined_traj)
