"""
Benchmark acceptance tests.

These runs take from seconds to minutes each; select or skip them with ``-m slow``.
"""

from typing import Any, Dict

import numpy as np
import pytest

from src.sirm_rom.core.config import config
from src.sirm_rom.core.experiment_config import ExperimentConfig
from src.sirm_rom.handlers.experiment_handlers import ExperimentHandlers
from src.sirm_rom.services.dirm import effective_dimension, equal_partition
from src.sirm_rom.services.experiment_service import (
    ExperimentService,
    minimal_dimension_search,
    posterior_correlation,
)

pytestmark = [pytest.mark.slow, pytest.mark.integration]

COARSE_20 = {"trial": "coarse_model", "coarse_points": 20, "fourier_modes": 10}


def _point(kind: str, method: str, name: str = "bench", **sections: Dict[str, Any]):
    return ExperimentConfig(name=name, kind=kind, method=method, **sections).with_defaults()


@pytest.fixture(scope="module")
def handlers():
    return ExperimentHandlers(ExperimentService(single_thread=True))


@pytest.fixture(scope="module")
def burgers_run(handlers):
    point = _point(
        "burgers",
        "sirm",
        sirm={"trial": "coarse_model", "coarse_points": 100, "eta": 1e-10, "epsilon": 1e-12},
    )
    return handlers.handle_run(point)


class TestAdvectionDiffusion:
    """Acceptance runs on the advection-diffusion benchmark."""

    def test_first_iteration(self, handlers):
        """Test the first-iteration dimension and the error after two iterations."""
        point = _point("adv_diff", "sirm", sirm={**COARSE_20, "eta": 1e-8, "max_iterations": 2})
        result = handlers.handle_run(point)
        report = result.convergence
        assert 11 <= report.records[0].k <= 16
        assert min(report.true_errors()) < 1e-3

    @pytest.mark.parametrize(
        "nu, sirm_dimension, dirm_dimension",
        [(1e-1, 13, 92), (1e-2, 12, 92), (1e-3, 15, 116), (1e-4, 16, 116)],
    )
    def test_minimal_dimensions(self, handlers, nu, sirm_dimension, dirm_dimension):
        """Test SIRM's minimal first-iteration dimension against the DIRM dimension."""
        point = _point("adv_diff", "sirm", model={"nu": nu}, sirm=dict(COARSE_20))
        model = handlers.build_model(point)
        integ = handlers.integrator_config(point)
        cfg = handlers.sirm_config(point, model)
        reference, _ = handlers.service.reference(handlers.reference_key(point), model, integ)
        k, _ = minimal_dimension_search(
            model, cfg, integ, reference, range(1, 2 * cfg.m + 1), 1e-3
        )
        dirm = effective_dimension(equal_partition(500, 25), config.dirm_modes(nu))
        assert dirm == dirm_dimension
        assert k is not None
        assert abs(k - sirm_dimension) <= 4
        assert k < dirm

    def test_local_sirm_constant_trial(self, handlers):
        """Test local SIRM with ten subintervals and constant trials."""
        point = _point(
            "adv_diff",
            "local_sirm",
            local={"n_subintervals": 10, "m_prime": 3, "trial": "constant"},
        )
        result = handlers.handle_run(point)
        assert result.row.metrics["error_final"] < 1e-3


class TestBurgers:
    """Acceptance runs on the Burgers benchmark."""

    def test_mode_growth(self, burgers_run):
        """Test the first three dimensions and the error plateau."""
        report = burgers_run.convergence
        for k, expected in zip(report.k_series[:3], (30, 62, 105)):
            assert abs(k - expected) <= 0.2 * expected
        tail = [error for error in report.true_errors()[4:] if error is not None]
        if len(tail) >= 2:
            assert max(tail) < 10.0 * min(tail)

    def test_posterior_estimate_tracks_error(self, burgers_run):
        """Test the correlation of the iterate distance with the true error."""
        records = posterior_correlation(burgers_run.convergence, burgers_run.reference)
        assert records[0].correlation > 0.9
        assert records[1].correlation > 0.9


class TestCavity:
    """Acceptance runs on the lid-driven cavity at desk scale."""

    def test_centerlines(self, handlers):
        """Test local SIRM centerline profiles against the full model."""
        point = _point("cavity", "local_sirm", local={"basis": "gram_schmidt"})
        result = handlers.handle_run(point)
        model = result.model
        _, u, _, v = model.centerline_velocities(result.trajectory.final_state)
        _, u_ref, _, v_ref = model.centerline_velocities(result.reference.final_state)
        assert np.max(np.abs(u - u_ref)) < 0.05
        assert np.max(np.abs(v - v_ref)) < 0.05
        assert result.local.avg_iterations <= 10

    def test_fixed_subinterval_length(self, handlers):
        """Test that more local samples reduce the error."""
        errors = [
            handlers.handle_run(
                _point("cavity", "local_sirm", local={"m_prime": m_prime})
            ).row.metrics["error_sup"]
            for m_prime in (2, 3, 5)
        ]
        assert errors[0] > errors[1] > errors[2]

    def test_fixed_total_samples(self, handlers):
        """Test that the error depends little on m' at a fixed total sample count."""
        errors = [
            handlers.handle_run(
                _point("cavity", "local_sirm", local={"m_total": 101, "m_prime": m_prime})
            ).row.metrics["error_sup"]
            for m_prime in (3, 5, 10)
        ]
        assert (max(errors) - min(errors)) / min(errors) < 0.15

    def test_scaling_ordering(self, handlers):
        """Test that local SIRM scales better with grid size than the full model."""
        study = handlers.handle_scaling(_point("scaling", "local_sirm"), [65, 97, 129])
        assert study.exponents["full"] >= 1.4
        assert study.exponents["local_sirm"] < study.exponents["full"]
