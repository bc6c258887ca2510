"""
Unit tests for the experiment service and its drivers.
"""

import math

import numpy as np
import pytest

from src.sirm_rom.core.exceptions import (
    ModelConfigurationError,
    ScalingFitError,
    SirmRomError,
    TimeRangeError,
)
from src.sirm_rom.core.experiment_config import ExperimentConfig
from src.sirm_rom.models.base import GridSpec1D, Trajectory
from src.sirm_rom.models.linear import LinearModel
from src.sirm_rom.models.periodic import make_advection_diffusion
from src.sirm_rom.rom.basis import EnergyCriterion
from src.sirm_rom.services.experiment_service import (
    ExperimentService,
    ResultRow,
    RunResult,
    compare_against_reference,
    minimal_dimension_search,
    posterior_correlation,
    scaling_study,
)
from src.sirm_rom.services.sirm import ConvergenceReport, SirmConfig, TrialSpec
from src.sirm_rom.solvers.integrators import IntegratorConfig, integrate_full


def _quartic_timer(n_side: int, method: str) -> float:
    scale = 1e-6 if method == "full" else 1e-7
    return scale * float(n_side**2) ** 2


class TestCompareAgainstReference:
    """Test cases for compare_against_reference."""

    def test_offset_trajectory(self):
        """Test the sup and final errors of a growing offset."""
        times = np.linspace(0.0, 1.0, 5)
        reference = Trajectory(times, np.zeros((2, 5)))
        result = Trajectory(times, np.vstack([times, np.zeros(5)]))
        metrics = compare_against_reference(result, reference)
        assert metrics.sup == pytest.approx(1.0)
        assert metrics.final == pytest.approx(1.0)
        np.testing.assert_allclose(metrics.series.values, times)

    def test_resamples_reference(self):
        """Test linear resampling of a finer reference."""
        fine = np.linspace(0.0, 1.0, 11)
        reference = Trajectory(fine, np.vstack([fine, fine]))
        coarse = np.linspace(0.0, 1.0, 3)
        result = Trajectory(coarse, np.vstack([coarse, coarse]))
        assert compare_against_reference(result, reference).sup == pytest.approx(0.0, abs=1e-14)

    def test_disjoint_ranges(self):
        """Test rejection of disjoint trajectories."""
        first = Trajectory(np.array([0.0, 1.0]), np.zeros((1, 2)))
        second = Trajectory(np.array([2.0, 3.0]), np.zeros((1, 2)))
        with pytest.raises(TimeRangeError):
            compare_against_reference(first, second)


class TestScalingStudy:
    """Test cases for the wall-clock scaling fit."""

    def test_recovers_exponent(self):
        """Test the log-log slope of a synthetic quadratic-in-n timer."""
        study = scaling_study([17, 33, 65], _quartic_timer)
        assert study.exponents["full"] == pytest.approx(2.0, abs=1e-10)
        assert study.exponents["local_sirm"] == pytest.approx(2.0, abs=1e-10)
        assert study.intercepts["full"] == pytest.approx(math.log(1e-6), abs=1e-8)
        assert len(study.rows) == 6
        assert all(row["status"] == "ok" for row in study.rows)
        assert [row["n"] for row in study.rows[:3]] == [289, 1089, 4225]

    def test_needs_three_distinct_sizes(self):
        """Test rejection of repeated or too few sizes."""
        with pytest.raises(ScalingFitError):
            scaling_study([65, 65, 129], _quartic_timer)
        with pytest.raises(ScalingFitError):
            scaling_study([65], _quartic_timer)

    def test_failed_size_becomes_error_row(self):
        """Test that a failing size is recorded and excluded from the fit."""

        def timer(n_side: int, method: str) -> float:
            if n_side == 33:
                raise ModelConfigurationError("too coarse", "n_side")
            return _quartic_timer(n_side, method)

        study = scaling_study([17, 33, 65, 129], timer, methods=("full",))
        failed = [row for row in study.rows if row["n_side"] == 33][0]
        assert failed["status"].startswith("error: ModelConfigurationError")
        assert math.isnan(failed["wall_time_s"])
        assert study.exponents["full"] == pytest.approx(2.0, abs=1e-10)

    def test_too_few_surviving_sizes(self):
        """Test the fit error when failures leave fewer than three sizes."""

        def timer(n_side: int, method: str) -> float:
            if n_side == 33:
                raise ModelConfigurationError("too coarse")
            return 1.0

        with pytest.raises(ScalingFitError) as excinfo:
            scaling_study([17, 33, 65], timer, methods=("full",))
        assert excinfo.value.sizes == [17, 65]


class TestPosteriorCorrelation:
    """Test cases for posterior_correlation."""

    TIMES = np.linspace(0.0, 1.0, 5)

    def _report(self, *iterates: np.ndarray) -> ConvergenceReport:
        return ConvergenceReport(
            sample_times=self.TIMES,
            sample_trajectories=[Trajectory(self.TIMES, states) for states in iterates],
        )

    def test_perfect_correlation(self):
        """Test r = 1 when the iterate distance tracks the true error."""
        first = np.vstack([self.TIMES, np.zeros(5)])
        reference = Trajectory(self.TIMES, np.zeros((2, 5)))
        records = posterior_correlation(self._report(first, 2.0 * first), reference)
        assert len(records) == 1
        assert records[0].iteration == 0
        assert records[0].correlation == pytest.approx(1.0)
        np.testing.assert_allclose(records[0].estimate, records[0].error)

    def test_constant_series_gives_nan(self):
        """Test that a flat estimate has no correlation."""
        first = np.vstack([self.TIMES, np.zeros(5)])
        second = first + np.array([[1.0], [0.0]])
        reference = Trajectory(self.TIMES, np.zeros((2, 5)))
        records = posterior_correlation(self._report(first, second), reference)
        assert math.isnan(records[0].correlation)
        assert math.isnan(records[0].p_value)

    def test_one_record_per_successor(self):
        """Test the record count for a real SIRM run."""
        rng = np.random.default_rng(0)
        model = LinearModel(
            rng.standard_normal(8),
            stiff_matrix=-np.eye(8) + 0.3 * rng.standard_normal((8, 8)) / np.sqrt(8),
        )
        integ = IntegratorConfig(dt=0.01, t_end=0.2)
        reference = integrate_full(model, integ)
        cfg = SirmConfig(criterion=EnergyCriterion(eta=1e-12), m=5, epsilon=1e-8)
        _, report, _ = ExperimentService(single_thread=True).run_sirm(model, cfg, integ)
        records = posterior_correlation(report, reference)
        assert len(records) == report.iterations
        for record in records:
            assert math.isnan(record.correlation) or -1.0 - 1e-12 <= record.correlation <= 1.0


class TestMinimalDimensionSearch:
    """Test cases for minimal_dimension_search."""

    def test_resting_model_needs_one_mode(self):
        """Test that the search stops at the first qualifying dimension."""
        model = LinearModel(np.array([1.0, -2.0, 0.5]))
        integ = IntegratorConfig(dt=0.1, t_end=1.0)
        reference = integrate_full(model, integ)
        cfg = SirmConfig(criterion=EnergyCriterion(eta=1e-8), m=5, epsilon=1e-8)
        k, errors = minimal_dimension_search(model, cfg, integ, reference, [3, 1, 2], 1e-8)
        assert k == 1
        assert list(errors) == [1]
        assert errors[1] < 1e-12

    def test_unreachable_threshold(self):
        """Test the None result when no candidate qualifies."""
        model = LinearModel(np.array([1.0, -2.0, 0.5]))
        integ = IntegratorConfig(dt=0.1, t_end=1.0)
        reference = integrate_full(model, integ)
        cfg = SirmConfig(criterion=EnergyCriterion(eta=1e-8), m=5, epsilon=1e-8)
        k, errors = minimal_dimension_search(model, cfg, integ, reference, [1], 0.0)
        assert k is None
        assert list(errors) == [1]


class TestExperimentService:
    """Test cases for ExperimentService."""

    @pytest.fixture
    def service(self):
        return ExperimentService(single_thread=True)

    def test_reference_is_cached(self, service):
        """Test that a second request for the same key reuses the first run."""
        model = LinearModel(np.ones(3), stiff_matrix=-np.eye(3))
        integ = IntegratorConfig(dt=0.1, t_end=1.0)
        first = service.reference("linear", model, integ)
        second = service.reference("linear", model, integ)
        assert first is second
        assert first[0].n_samples == 11

    def test_run_full(self, service):
        """Test the timed full-model run."""
        model = LinearModel(np.ones(2), stiff_matrix=-np.eye(2))
        trajectory, elapsed = service.run_full(model, IntegratorConfig(dt=0.1, t_end=0.5))
        assert trajectory.n_samples == 6
        assert elapsed >= 0.0

    def test_run_coarse(self, service):
        """Test the coarse-model trial on the fine grid."""
        model = make_advection_diffusion(GridSpec1D(100), 0.5, 1e-3)
        trial = TrialSpec(kind="coarse_model", coarse_factor=5)
        trajectory, elapsed = service.run_coarse(
            model, trial, IntegratorConfig(dt=1e-3, t_end=0.05), 6
        )
        assert trajectory.states.shape == (100, 6)
        np.testing.assert_allclose(trajectory.times, np.linspace(0.0, 0.05, 6))
        assert elapsed >= 0.0

    @staticmethod
    def _runner(point: ExperimentConfig) -> RunResult:
        if point.name == "bad":
            raise ModelConfigurationError("bad point", "m")
        row = ResultRow(config=point.to_flat(), metrics={"value": len(point.name)})
        return RunResult(point=point, row=row)

    @pytest.mark.parametrize("single_thread", [True, False])
    def test_sweep_keeps_order_and_records_errors(self, single_thread):
        """Test error rows and result order in both execution modes."""
        service = ExperimentService(single_thread=single_thread, max_workers=3)
        names = ["a", "bad", "ccc", "dd"]
        points = [ExperimentConfig(name=name, kind="adv_diff") for name in names]
        results = service.run_sweep(points, self._runner)
        assert [result.point.name for result in results] == names
        assert [result.row.ok for result in results] == [True, False, True, True]
        failed = results[1].row
        assert failed.status == "error: ModelConfigurationError: bad point"
        assert failed.as_dict()["experiment.name"] == "bad"
        assert "wall_time_s" in failed.metrics
        assert results[2].row.metrics["value"] == 3

    def test_unexpected_errors_propagate(self, service):
        """Test that non-domain errors are not swallowed."""

        def runner(point: ExperimentConfig) -> RunResult:
            raise KeyError(point.name)

        with pytest.raises(KeyError):
            service.run_sweep([ExperimentConfig(name="x", kind="adv_diff")], runner)

    def test_result_row(self):
        """Test the flattened row with its status column."""
        row = ResultRow(config={"model.c": 0.5}, metrics={"sup_error": 1e-3})
        assert row.ok
        assert row.as_dict() == {"model.c": 0.5, "sup_error": 1e-3, "status": "ok"}
        assert issubclass(ModelConfigurationError, SirmRomError)
