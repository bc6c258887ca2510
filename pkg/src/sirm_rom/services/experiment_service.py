"""
Experiment service operations.

This module runs the solution methods on a model, compares results against full-model
references, and provides the sweep, dimension-search and scaling-study drivers used by the
benchmark CLI.
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import pearsonr

from ..core.config import config
from ..core.exceptions import ScalingFitError, SirmRomError
from ..core.experiment_config import ExperimentConfig
from ..models.base import FullModel, Trajectory
from ..rom.basis import EnergyCriterion
from ..solvers.integrators import IntegratorConfig, integrate_full
from ..utils.helpers import DistanceSeries, Stopwatch, distance_series, linear_fit
from .dirm import dirm_solve
from .local_sirm import LocalRunReport, PartitionConfig, local_sirm_solve
from .sirm import (
    ConvergenceReport,
    SirmConfig,
    TrialSpec,
    build_trial,
    iterate,
    posterior_error,
    sirm_solve,
)

logger = logging.getLogger(__name__)


@dataclass
class ErrorMetrics:
    """Errors of a trajectory against a reference (unweighted L2 over grid values)."""

    sup: float
    final: float
    series: DistanceSeries


@dataclass
class ResultRow:
    """One self-describing result record: effective configuration, metrics and status."""

    config: Dict[str, Any]
    metrics: Dict[str, Any] = field(default_factory=dict)
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_dict(self) -> Dict[str, Any]:
        row = dict(self.config)
        row.update(self.metrics)
        row["status"] = self.status
        return row


@dataclass
class RunResult:
    """Everything one sweep point produced."""

    point: ExperimentConfig
    row: ResultRow
    trajectory: Optional[Trajectory] = None
    reference: Optional[Trajectory] = None
    model: Optional[FullModel] = None
    convergence: Optional[ConvergenceReport] = None
    local: Optional[LocalRunReport] = None


@dataclass
class PosteriorRecord:
    """Agreement of the successive-iterate distance with the true error for one iteration."""

    iteration: int
    correlation: float
    p_value: float
    times: np.ndarray
    estimate: np.ndarray
    error: np.ndarray


@dataclass
class ScalingStudy:
    """Timings per grid size and the fitted log-log exponents per method."""

    rows: List[Dict[str, Any]]
    exponents: Dict[str, float]
    intercepts: Dict[str, float]


def compare_against_reference(result: Trajectory, reference: Trajectory) -> ErrorMetrics:
    """
    Compare a trajectory against a reference on the result's sample times.

    Args:
        result: Approximate trajectory
        reference: Reference trajectory, resampled linearly in time where grids differ

    Returns:
        ErrorMetrics with the sup-over-time error, the series and the final-time error

    Raises:
        TimeRangeError: If the time ranges are disjoint
    """
    series = distance_series(result, reference)
    return ErrorMetrics(sup=series.sup, final=series.final, series=series)


def minimal_dimension_search(
    model: FullModel,
    cfg: SirmConfig,
    integ: IntegratorConfig,
    reference: Trajectory,
    k_values: Sequence[int],
    threshold: float,
) -> Tuple[Optional[int], Dict[int, float]]:
    """
    Smallest fixed dimension whose first SIRM iteration meets an error threshold.

    Args:
        model: Full model
        cfg: SIRM settings providing the trial, m and gamma
        integ: Integrator config
        reference: Full-model reference
        k_values: Candidate dimensions
        threshold: Sup-norm error threshold

    Returns:
        Tuple of the minimal k (None if no candidate qualifies) and the error per candidate
    """
    times = np.linspace(integ.t_start, integ.t_end, cfg.m)
    x0 = model.initial_state
    trial = build_trial(model, cfg.trial, integ, times, x0)
    errors: Dict[int, float] = {}
    for k in sorted(set(int(k) for k in k_values)):
        fixed = replace(cfg, criterion=EnergyCriterion.fixed(k), max_iterations=1)
        outcome, _ = iterate(model, trial, x0, fixed, integ, log=logger.debug)
        errors[k] = distance_series(outcome.samples, reference).sup
        logger.info(f"🔁 Dimension search: k = {k}, error {errors[k]:.3e}")
        if errors[k] < threshold:
            return k, errors
    return None, errors


def posterior_correlation(
    report: ConvergenceReport, reference: Trajectory
) -> List[PosteriorRecord]:
    """
    Correlate the successive-iterate distance with the true error of each iteration.

    Iteration j compares ||x^{j+1} - x^j||(t) with ||x^j - x||(t) on the sample times.

    Args:
        report: Convergence report holding the sampled iterates
        reference: Full-model reference

    Returns:
        List of PosteriorRecord, one per iteration with a successor
    """
    records = []
    iterates = report.sample_trajectories
    for j in range(len(iterates) - 1):
        estimate = posterior_error(iterates[j], iterates[j + 1])
        error = distance_series(iterates[j], reference)
        if np.ptp(estimate.values) == 0.0 or np.ptp(error.values) == 0.0:
            correlation, p_value = float("nan"), float("nan")
        else:
            result = pearsonr(estimate.values, error.values)
            correlation, p_value = float(result[0]), float(result[1])
        records.append(
            PosteriorRecord(
                iteration=j,
                correlation=correlation,
                p_value=p_value,
                times=estimate.times,
                estimate=estimate.values,
                error=error.values,
            )
        )
    return records


def scaling_study(
    sizes: Sequence[int],
    timer: Callable[[int, str], float],
    methods: Sequence[str] = ("full", "local_sirm"),
) -> ScalingStudy:
    """
    Wall-clock scaling of the methods with grid size.

    The exponent is the least-squares slope of log(time) against log(n), n = n_side**2 being the
    number of grid nodes.

    Args:
        sizes: Grid sizes n_side (at least 3 distinct)
        timer: Callable (n_side, method) -> wall time in seconds
        methods: Methods to time

    Returns:
        ScalingStudy

    Raises:
        ScalingFitError: If a method keeps fewer than 3 distinct sizes
    """
    distinct = sorted(set(int(size) for size in sizes))
    if len(distinct) < 3:
        raise ScalingFitError("Scaling fit needs at least 3 distinct grid sizes", distinct)

    rows: List[Dict[str, Any]] = []
    exponents: Dict[str, float] = {}
    intercepts: Dict[str, float] = {}
    for method in methods:
        survived: List[Tuple[int, float]] = []
        for n_side in distinct:
            try:
                elapsed = float(timer(n_side, method))
                status = "ok"
                survived.append((n_side, elapsed))
            except SirmRomError as e:
                logger.warning(f"⚠️ Scaling run {method} at {n_side}x{n_side} excluded: {e}")
                elapsed, status = float("nan"), f"error: {type(e).__name__}: {e}"
            rows.append(
                {
                    "method": method,
                    "n_side": n_side,
                    "n": n_side**2,
                    "wall_time_s": elapsed,
                    "status": status,
                }
            )
        if len(survived) < 3:
            raise ScalingFitError(
                f"Only {len(survived)} surviving sizes for {method}", [s for s, _ in survived]
            )
        n = np.array([s**2 for s, _ in survived], dtype=float)
        elapsed_times = np.array([t for _, t in survived])
        slope, intercept = linear_fit(np.log(n), np.log(elapsed_times))
        exponents[method], intercepts[method] = slope, intercept
        logger.info(f"📊 Scaling exponent of {method}: {slope:.2f}")
    return ScalingStudy(rows=rows, exponents=exponents, intercepts=intercepts)


class ExperimentService:
    """Service class running solution methods and sweeps."""

    def __init__(self, single_thread: bool = False, max_workers: Optional[int] = None):
        """
        Initialize the experiment service.

        Args:
            single_thread: Run sweep points sequentially
            max_workers: Worker threads for concurrent sweeps (default: SIRM_MAX_WORKERS)
        """
        self.single_thread = single_thread or config.single_thread
        self.max_workers = max_workers or config.max_workers
        self.logger = logging.getLogger(__name__)
        self._references: Dict[Hashable, Tuple[Trajectory, float]] = {}
        self._lock = threading.Lock()

    def reference(
        self, key: Hashable, model: FullModel, integ: IntegratorConfig
    ) -> Tuple[Trajectory, float]:
        """
        Full-model reference run, cached per key.

        Returns:
            Tuple of the reference trajectory and its wall time
        """
        with self._lock:
            cached = self._references.get(key)
        if cached is not None:
            return cached
        trajectory, elapsed = self.run_full(model, integ)
        with self._lock:
            self._references.setdefault(key, (trajectory, elapsed))
            return self._references[key]

    def run_full(self, model: FullModel, integ: IntegratorConfig) -> Tuple[Trajectory, float]:
        """Integrate the full model and time it."""
        self.logger.info(f"🚀 Full model {model.name} (n = {model.dim}, {integ.n_steps} steps)")
        with Stopwatch() as watch:
            trajectory = integrate_full(model, integ)
        self.logger.info(f"✅ Full model done in {watch.elapsed:.2f}s")
        return trajectory, watch.elapsed

    def run_sirm(
        self,
        model: FullModel,
        cfg: SirmConfig,
        integ: IntegratorConfig,
        reference: Optional[Trajectory] = None,
    ) -> Tuple[Trajectory, ConvergenceReport, float]:
        with Stopwatch() as watch:
            trajectory, report = sirm_solve(model, cfg, integ, reference)
        return trajectory, report, watch.elapsed

    def run_local_sirm(
        self,
        model: FullModel,
        part: PartitionConfig,
        integ: IntegratorConfig,
        reference: Optional[Trajectory] = None,
    ) -> Tuple[Trajectory, LocalRunReport, float]:
        with Stopwatch() as watch:
            trajectory, report = local_sirm_solve(model, part, integ, reference)
        return trajectory, report, watch.elapsed

    def run_dirm(
        self,
        model: FullModel,
        partition: Sequence[int],
        cfg: SirmConfig,
        integ: IntegratorConfig,
        modes_per_block: int,
        reference: Optional[Trajectory] = None,
    ) -> Tuple[Trajectory, ConvergenceReport, float]:
        with Stopwatch() as watch:
            trajectory, report = dirm_solve(
                model, partition, cfg, integ, modes_per_block, reference
            )
        return trajectory, report, watch.elapsed

    def run_coarse(
        self, model: FullModel, trial: TrialSpec, integ: IntegratorConfig, m: int
    ) -> Tuple[Trajectory, float]:
        """Coarse-model trial alone, filtered and lifted to the fine grid at m sample times."""
        times = np.linspace(integ.t_start, integ.t_end, m)
        with Stopwatch() as watch:
            trajectory = build_trial(model, trial, integ, times, model.initial_state)
        return trajectory, watch.elapsed

    def run_sweep(
        self,
        points: List[ExperimentConfig],
        runner: Callable[[ExperimentConfig], RunResult],
    ) -> List[RunResult]:
        """
        Run every sweep point, converting failures into error rows.

        Args:
            points: Sweep point configurations
            runner: Callable executing one point

        Returns:
            List of RunResult in the order of ``points``
        """

        def guarded(point: ExperimentConfig) -> RunResult:
            started = time.perf_counter()
            try:
                return runner(point)
            except (SirmRomError, np.linalg.LinAlgError) as e:
                self.logger.warning(f"⚠️ Sweep point {point.name} failed: {e}")
                row = ResultRow(
                    config=point.to_flat(),
                    metrics={"wall_time_s": time.perf_counter() - started},
                    status=f"error: {type(e).__name__}: {e}",
                )
                return RunResult(point=point, row=row)

        self.logger.info(f"🚀 Running {len(points)} sweep point(s)")
        if self.single_thread or len(points) == 1:
            return [guarded(point) for point in points]
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            return list(executor.map(guarded, points))
