"""
Unit tests for the experiment handlers.
"""

from typing import Any, Dict

import numpy as np
import pytest

from src.sirm_rom.core.exceptions import ExperimentNotFoundError, ModelConfigurationError
from src.sirm_rom.core.experiment_config import ExperimentConfig
from src.sirm_rom.handlers.experiment_handlers import ExperimentHandlers
from src.sirm_rom.models.cavity import CavityModel
from src.sirm_rom.models.linear import LinearModel
from src.sirm_rom.services.experiment_service import ExperimentService


def make_linear(params: Dict[str, Any]) -> LinearModel:
    n = int(params.get("n_points", 4))
    return LinearModel(np.ones(n), stiff_matrix=-np.eye(n))


def make_nothing(params: Dict[str, Any]) -> str:
    return "not a model"


def _point(kind: str, method: str = "sirm", **sections: Dict[str, Any]) -> ExperimentConfig:
    point = ExperimentConfig(name="point", kind=kind, method=method, **sections)
    return point.with_defaults()


SMALL_ADV = {"n_points": 64, "t_end": 0.05, "dt": 1e-3}


class TimingStubService(ExperimentService):
    """Service whose timings are the state dimension."""

    def run_full(self, model, integ):
        return None, float(model.dim)

    def run_local_sirm(self, model, part, integ, reference=None):
        return None, None, 0.5 * model.dim


@pytest.fixture
def handlers():
    return ExperimentHandlers(ExperimentService(single_thread=True))


class TestBuildModel:
    """Test cases for building models from experiment points."""

    def test_benchmark_kinds(self, handlers):
        """Test the built-in benchmark models and their default sizes."""
        assert handlers.build_model(_point("adv_diff")).dim == 500
        assert handlers.build_model(_point("burgers", model={"n_points": 64})).dim == 64
        cavity = handlers.build_model(_point("cavity", model={"n_side": 17}))
        assert isinstance(cavity, CavityModel)
        assert cavity.dim == 2 * 17**2

    def test_custom_factory(self, handlers):
        """Test loading a model factory by import path."""
        point = _point(
            "custom",
            model={"n_points": 6},
            factory="tests.unit.test_experiment_handlers:make_linear",
        )
        model = handlers.build_model(point)
        assert isinstance(model, LinearModel)
        assert model.dim == 6

    @pytest.mark.parametrize(
        "factory",
        [
            "no_colon_here",
            "tests.unit.test_experiment_handlers:missing",
            "tests.unit.no_such_module:make_linear",
            "tests.unit.test_experiment_handlers:make_nothing",
        ],
    )
    def test_bad_factories(self, handlers, factory):
        """Test rejection of malformed, missing and non-model factories."""
        with pytest.raises(ModelConfigurationError) as excinfo:
            handlers.build_model(_point("custom", factory=factory))
        assert excinfo.value.parameter == "factory"

    def test_unknown_kind(self, handlers):
        """Test the not-found error for an unknown kind."""
        with pytest.raises(ExperimentNotFoundError):
            handlers.build_model(ExperimentConfig(name="x", kind="heat"))


class TestTranslation:
    """Test cases for integrator, trial and solver settings."""

    def test_integrator_config(self, handlers):
        """Test the benchmark time span and step."""
        integ = handlers.integrator_config(_point("adv_diff"))
        assert integ.dt == pytest.approx(1e-3)
        assert integ.n_steps == 500

    def test_scaling_step_follows_grid(self, handlers):
        """Test the CFL-consistent step of scaling runs."""
        integ = handlers.integrator_config(_point("scaling", model={"n_side": 129}))
        assert integ.dt == pytest.approx(5e-3)
        assert integ.n_steps == 1000

    def test_missing_time_settings(self, handlers):
        """Test the error for a model section without t_end."""
        with pytest.raises(ModelConfigurationError) as excinfo:
            handlers.integrator_config(ExperimentConfig(name="x", kind="custom"))
        assert excinfo.value.parameter == "t_end"

    def test_trial_specs(self, handlers):
        """Test constant and coarse trials, by factor and by point count."""
        point = _point("adv_diff")
        model = handlers.build_model(point)
        assert handlers.trial_spec(point, model, "constant").kind == "constant_ic"
        by_factor = handlers.trial_spec(point, model, "coarse_model")
        assert by_factor.coarse_factor == 25
        assert by_factor.coarse_dt == pytest.approx(2.5e-2)
        assert by_factor.fourier_modes == 10
        by_points = handlers.trial_spec(
            _point("adv_diff", sirm={"coarse_points": 30}), model, "coarse_model"
        )
        assert by_points.coarse_points == 30
        assert by_points.coarse_factor is None
        with pytest.raises(ModelConfigurationError):
            handlers.trial_spec(point, model, "random")

    def test_cavity_trial_is_unfiltered(self, handlers):
        """Test that cavity coarse trials carry no Fourier filter."""
        point = _point("cavity", model={"n_side": 17})
        model = handlers.build_model(point)
        trial = handlers.trial_spec(point, model, "coarse_model")
        assert trial.fourier_modes is None
        assert trial.coarse_factor == 2

    def test_sirm_config(self, handlers):
        """Test the SIRM settings including a fixed dimension."""
        point = _point("adv_diff", sirm={"k_fixed": 4, "trial": "constant"})
        cfg = handlers.sirm_config(point, handlers.build_model(point))
        assert cfg.m == 51
        assert cfg.epsilon == pytest.approx(1e-5)
        assert cfg.trial.kind == "constant_ic"
        assert cfg.criterion.select(np.ones(10)) == 4

    @pytest.mark.parametrize("m_prime, expected", [(3, 50), (5, 25), (6, 20), (11, 10)])
    def test_partition_from_total_samples(self, handlers, m_prime, expected):
        """Test the subinterval count nearest to (m - 1)/(m' - 1) among divisors of the steps."""
        point = _point(
            "adv_diff", model={"t_end": 1.0}, local={"m_total": 101, "m_prime": m_prime}
        )
        model = handlers.build_model(point)
        integ = handlers.integrator_config(point)
        assert integ.n_steps == 1000
        part = handlers.partition_config(point, model, integ)
        assert part.n_subintervals == expected
        assert part.m_prime == m_prime

    def test_partition_defaults(self, handlers):
        """Test the fixed subinterval count and a coarse fallback trial."""
        point = _point("adv_diff", local={"fallback_trial": "coarse_model"})
        model = handlers.build_model(point)
        part = handlers.partition_config(point, model, handlers.integrator_config(point))
        assert part.n_subintervals == 10
        assert part.fallback_trial == "coarse_model"
        assert part.inner.trial.kind == "coarse_model"
        assert part.inner.m == 3

    def test_reference_key_ignores_solver_settings(self, handlers):
        """Test that points differing only in SIRM settings share a reference."""
        first = _point("adv_diff", sirm={"eta": 1e-6})
        second = _point("adv_diff", sirm={"eta": 1e-10})
        assert handlers.reference_key(first) == handlers.reference_key(second)
        third = _point("adv_diff", model={"nu": 1e-2})
        assert handlers.reference_key(first) != handlers.reference_key(third)


class TestHandleRun:
    """Test cases for routing points to methods."""

    def test_full(self, handlers):
        """Test that the full method reports the reference itself."""
        result = handlers.handle_run(_point("adv_diff", "full", model=SMALL_ADV))
        metrics = result.row.metrics
        assert result.row.ok
        assert metrics["k"] == 64
        assert metrics["iterations"] == 0
        assert metrics["error_sup"] == 0.0

    def test_sirm(self, handlers):
        """Test a small SIRM run and its metrics."""
        point = _point(
            "adv_diff",
            "sirm",
            model=SMALL_ADV,
            sirm={"m": 6, "trial": "constant", "eta": 1e-10, "epsilon": 1e-6},
        )
        result = handlers.handle_run(point)
        metrics = result.row.metrics
        assert result.convergence is not None
        assert metrics["iterations"] == result.convergence.iterations
        assert np.isfinite(metrics["error_sup"])
        assert result.row.as_dict()["sirm.m"] == 6

    def test_local_sirm(self, handlers):
        """Test a small local SIRM run and its partition metrics."""
        point = _point(
            "adv_diff",
            "local_sirm",
            model=SMALL_ADV,
            local={"n_subintervals": 5, "m_prime": 3, "epsilon": 1e-6},
        )
        result = handlers.handle_run(point)
        metrics = result.row.metrics
        assert result.local is not None
        assert metrics["n_subintervals"] == 5
        assert metrics["m_total"] == 11
        assert len(result.local.records) == 5

    def test_dirm(self, handlers):
        """Test the effective dimension reported for DIRM."""
        point = _point(
            "adv_diff",
            "dirm",
            model={"n_points": 40, "t_end": 0.02, "dt": 1e-3},
            sirm={"m": 5, "dirm_blocks": 4, "dirm_modes": 3, "max_iterations": 2},
        )
        metrics = handlers.handle_run(point).row.metrics
        assert metrics["k"] == 19
        assert metrics["modes_per_block"] == 3

    def test_coarse(self, handlers):
        """Test the coarse-model trial on its own."""
        point = _point(
            "adv_diff",
            "coarse",
            model={"n_points": 100, "t_end": 0.05, "dt": 1e-3},
            sirm={"m": 6, "coarse_factor": 5, "coarse_dt": 5e-3},
        )
        result = handlers.handle_run(point)
        assert result.trajectory.states.shape == (100, 6)
        assert result.row.metrics["coarse_factor"] == 5
        assert np.isfinite(result.row.metrics["error_sup"])

    def test_unknown_method(self, handlers):
        """Test the not-found error for an unknown method."""
        point = _point("adv_diff", "bogus", model=SMALL_ADV)
        with pytest.raises(ExperimentNotFoundError):
            handlers.handle_run(point)


class TestHandleScaling:
    """Test cases for the scaling handler."""

    def test_exponent_from_stub_timings(self):
        """Test that timings proportional to n give a unit exponent."""
        handlers = ExperimentHandlers(TimingStubService(single_thread=True))
        study = handlers.handle_scaling(_point("scaling"), [17, 33, 65])
        assert study.exponents["full"] == pytest.approx(1.0)
        assert study.exponents["local_sirm"] == pytest.approx(1.0)
        assert [row["n_side"] for row in study.rows] == [17, 33, 65, 17, 33, 65]
