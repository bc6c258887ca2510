"""
Local SIRM: SIRM applied on consecutive subintervals of the time domain.

The span is cut into M equal subintervals aligned with the unit step. Each subinterval runs the
SIRM loop with m' samples from the accepted ending state of the previous one, so the local bases
stay small. From the second subinterval on, the trial can be built from the time history of the
previous subinterval.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from ..core.config import config
from ..core.exceptions import (
    DegenerateEnsembleError,
    ModelConfigurationError,
    SirmRomError,
    SubintervalError,
)
from ..models.base import FullModel, Trajectory
from ..rom.basis import InformationMatrix, assemble_information_matrix, project
from ..rom.reduced import build_reduced_model
from ..solvers.integrators import IntegratorConfig, integrate_reduced
from ..utils.validators import validate_divisibility
from .sirm import (
    ConvergenceReport,
    IterationOutcome,
    SirmConfig,
    TrialSpec,
    build_basis,
    build_trial,
    iterate,
    lift_samples,
    reduced_integrator,
    sirm_iteration,
)

logger = logging.getLogger(__name__)

TRIAL_STRATEGIES = ("constant", "coarse_model", "time_history")
LOCAL_BASIS_METHODS = ("auto", "gram_schmidt", "pod")


@dataclass(frozen=True)
class PartitionConfig:
    """Time-domain partition and the per-subinterval SIRM settings."""

    n_subintervals: int
    m_prime: int
    inner: SirmConfig
    trial_strategy: str = "time_history"
    fallback_trial: str = "constant"
    basis_method: str = "auto"

    def __post_init__(self) -> None:
        if self.n_subintervals < 1:
            raise ModelConfigurationError("Need at least one subinterval", "n_subintervals")
        if self.m_prime < 2:
            raise ModelConfigurationError(
                f"Need at least 2 samples per subinterval, got {self.m_prime}", "m_prime"
            )
        if self.trial_strategy not in TRIAL_STRATEGIES:
            raise ModelConfigurationError(
                f"Unknown trial strategy '{self.trial_strategy}'", "trial"
            )
        if self.fallback_trial not in ("constant", "coarse_model"):
            raise ModelConfigurationError(
                f"Unknown fallback trial '{self.fallback_trial}'", "fallback_trial"
            )
        if self.basis_method not in LOCAL_BASIS_METHODS:
            raise ModelConfigurationError(
                f"Unknown basis method '{self.basis_method}'", "basis_method"
            )
        needs_coarse = "coarse_model" in (self.trial_strategy, self.fallback_trial)
        if needs_coarse and self.inner.trial.kind != "coarse_model":
            raise ModelConfigurationError(
                "A coarse_model trial needs coarse parameters in the inner config", "trial"
            )

    @property
    def m_total(self) -> int:
        """Global sample count (m' - 1) M + 1."""
        return (self.m_prime - 1) * self.n_subintervals + 1

    @property
    def resolved_basis_method(self) -> str:
        if self.basis_method != "auto":
            return self.basis_method
        if self.m_prime <= config.GRAM_SCHMIDT_AUTO_MAX_SAMPLES:
            return "gram_schmidt"
        return "pod"

    def local_config(self) -> SirmConfig:
        """Inner SIRM settings applied on every subinterval."""
        return replace(self.inner, m=self.m_prime, basis_method=self.resolved_basis_method)


@dataclass
class SubintervalRecord:
    """Outcome of the SIRM loop on one subinterval."""

    index: int
    iterations: int
    k_prime: int
    endpoint_norm: float
    successive_diff: float
    wall_time: float
    trial_kind: str
    converged: bool = True


@dataclass
class LocalRunReport:
    """Per-subinterval records of a local SIRM run."""

    records: List[SubintervalRecord] = field(default_factory=list)
    wall_time: float = 0.0
    convergence: List[ConvergenceReport] = field(default_factory=list)

    @property
    def avg_iterations(self) -> float:
        if not self.records:
            return 0.0
        return float(np.mean([record.iterations for record in self.records]))

    @property
    def max_k_prime(self) -> int:
        return max((record.k_prime for record in self.records), default=0)


def ab2_degeneration_coefficients(dt: float, gamma: float = 1.0) -> np.ndarray:
    """
    Weights on [x(t_{i-2}), x(t_{i-1}), gamma f_{i-2}, gamma f_{i-1}] giving the AB2 step.

    With two samples per subinterval and one unit step per subinterval the time-history trial
    endpoint reduces to this combination.
    """
    return np.array([0.0, 1.0, -dt / (2.0 * gamma), 3.0 * dt / (2.0 * gamma)])


def cn_degeneration_coefficients(dt: float, gamma: float = 1.0) -> np.ndarray:
    """Weights on [x(t_{i-1}), x(t_i), gamma f_{i-1}, gamma f_i] giving the trapezoidal step."""
    return np.array([1.0, 0.0, dt / (2.0 * gamma), dt / (2.0 * gamma)])


def combine_columns(Y: InformationMatrix, coefficients: np.ndarray) -> np.ndarray:
    """Linear combination of information-matrix columns."""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.size != Y.columns.shape[1]:
        raise ModelConfigurationError(
            f"{coefficients.size} coefficients for {Y.columns.shape[1]} columns", "coefficients"
        )
    return Y.columns @ coefficients


def time_history_trial(
    prev: Trajectory,
    model: FullModel,
    gamma: float,
    window: IntegratorConfig,
    times: np.ndarray,
    cfg: SirmConfig,
) -> Trajectory:
    """
    Trial on a subinterval from the accepted samples of the previous one.

    The previous samples and their tangents span the trial subspace; the projected model is
    integrated over the window from the previous ending state.

    Args:
        prev: Accepted samples of the previous subinterval
        model: Full model
        gamma: Tangent weighting
        window: Integrator config over the new subinterval
        times: Sample times of the new subinterval
        cfg: Local SIRM settings (basis method, ensemble splitting, reduced step)

    Returns:
        Trajectory: Trial samples at ``times``

    Raises:
        DegenerateEnsembleError: If the previous samples span no subspace
    """
    x_start = prev.final_state
    ensemble = assemble_information_matrix(
        prev, model, gamma, "states_and_tangents", cfg.split_fields
    )
    basis = build_basis(ensemble, cfg)
    reduced = build_reduced_model(basis, model)
    trajectory = integrate_reduced(
        None, None, project(basis, x_start), reduced_integrator(cfg, window), reduced=reduced
    )
    return lift_samples(model, basis, trajectory, times, x_start)


def local_inner_iteration(
    x_start: np.ndarray,
    samples: Trajectory,
    model: FullModel,
    cfg: SirmConfig,
    window: IntegratorConfig,
) -> IterationOutcome:
    """One SIRM step restricted to a subinterval."""
    if samples.n_samples != cfg.m:
        raise ModelConfigurationError(
            f"Local trajectory has {samples.n_samples} samples, expected {cfg.m}", "m_prime"
        )
    return sirm_iteration(model, samples, x_start, cfg, window)


def _trial_spec(part: PartitionConfig, kind: str) -> TrialSpec:
    if kind == "coarse_model":
        return part.inner.trial
    return TrialSpec()


def _window_record_times(integ: IntegratorConfig, start: int, end: int) -> np.ndarray:
    steps = [s for s in range(start, end + 1) if s % integ.record_every == 0]
    if not steps or steps[0] != start:
        steps.insert(0, start)
    if steps[-1] != end:
        steps.append(end)
    return np.array([integ.step_time(s) for s in steps])


def _initial_trial(
    model: FullModel,
    part: PartitionConfig,
    local_cfg: SirmConfig,
    window: IntegratorConfig,
    times: np.ndarray,
    x_start: np.ndarray,
    previous: Optional[Trajectory],
) -> Tuple[Trajectory, str]:
    kind = part.trial_strategy
    if kind == "time_history":
        if previous is not None:
            try:
                trial = time_history_trial(
                    previous, model, local_cfg.gamma, window, times, local_cfg
                )
                return trial, kind
            except DegenerateEnsembleError as e:
                logger.warning(f"⚠️ Time-history trial unusable ({e}); using a constant trial")
                kind = "constant"
        else:
            kind = part.fallback_trial
    return build_trial(model, _trial_spec(part, kind), window, times, x_start), kind


def local_sirm_solve(
    model: FullModel,
    part: PartitionConfig,
    integ: IntegratorConfig,
    reference: Optional[Trajectory] = None,
) -> Tuple[Trajectory, LocalRunReport]:
    """
    Local SIRM over the whole integration span.

    Args:
        model: Full model
        part: Partition and inner SIRM settings
        integ: Integrator config (span, unit step, record stride of the returned trajectory)
        reference: Optional full-model reference for true-error diagnostics

    Returns:
        Tuple of the concatenated trajectory, recorded every ``integ.record_every`` steps and
        at every subinterval endpoint, and the LocalRunReport

    Raises:
        ModelConfigurationError: If the subintervals are not aligned with the unit step
        SubintervalError: If the SIRM loop fails on a subinterval
    """
    n_sub = part.n_subintervals
    if not validate_divisibility(integ.n_steps, n_sub):
        raise ModelConfigurationError(
            f"{n_sub} subintervals do not divide {integ.n_steps} steps", "n_subintervals"
        )
    steps_per = integ.n_steps // n_sub
    local_cfg = part.local_config()
    logger.info(
        f"🚀 Local SIRM on {model.name}: M = {n_sub}, m' = {part.m_prime} "
        f"(m = {part.m_total}), basis {local_cfg.basis_method}, trial {part.trial_strategy}"
    )

    report = LocalRunReport()
    parts: List[Trajectory] = []
    x_start = model.initial_state
    previous: Optional[Trajectory] = None
    started = time.perf_counter()

    for i in range(1, n_sub + 1):
        window_started = time.perf_counter()
        first, last = (i - 1) * steps_per, i * steps_per
        t0 = integ.t_start if first == 0 else integ.step_time(first)
        t1 = integ.t_end if last == integ.n_steps else integ.step_time(last)
        window = integ.with_span(t0, t1)
        times = np.linspace(t0, t1, part.m_prime)
        try:
            trial, trial_kind = _initial_trial(
                model, part, local_cfg, window, times, x_start, previous
            )
            outcome, sub_report = iterate(
                model, trial, x_start, local_cfg, window, reference, log=logger.debug
            )
            window_traj = lift_samples(
                model,
                outcome.basis,
                outcome.reduced_trajectory,
                _window_record_times(integ, first, last),
                x_start,
            )
        except SirmRomError as e:
            logger.error(f"❌ Local SIRM failed on subinterval {i}: {e}")
            raise SubintervalError(i, str(e)) from e

        parts.append(window_traj)
        previous = outcome.samples
        x_start = window_traj.final_state
        last_record = sub_report.records[-1]
        record = SubintervalRecord(
            index=i,
            iterations=sub_report.iterations,
            k_prime=last_record.k,
            endpoint_norm=float(np.linalg.norm(x_start)),
            successive_diff=last_record.successive_diff,
            wall_time=time.perf_counter() - window_started,
            trial_kind=trial_kind,
            converged=sub_report.converged,
        )
        report.records.append(record)
        report.convergence.append(sub_report)
        if not sub_report.converged:
            logger.warning(
                f"⚠️ Subinterval {i} stopped at the iteration cap "
                f"(successive diff {record.successive_diff:.3e})"
            )
        logger.info(
            f"🔁 Subinterval {i}/{n_sub}: {record.iterations} iterations, "
            f"k' = {record.k_prime}, |x| = {record.endpoint_norm:.4e}"
        )

    trajectory = Trajectory.concatenate(parts)
    for left, right in zip(parts[:-1], parts[1:]):
        assert np.array_equal(left.final_state, right.initial_state)
    report.wall_time = time.perf_counter() - started
    logger.info(
        f"✅ Local SIRM done in {report.wall_time:.2f}s, "
        f"{report.avg_iterations:.1f} iterations per subinterval on average"
    )
    return trajectory, report
