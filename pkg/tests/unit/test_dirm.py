"""
Unit tests for the DIRM baseline.
"""

import numpy as np
import pytest
from scipy.linalg import block_diag

from src.sirm_rom.core.exceptions import ModelConfigurationError
from src.sirm_rom.models.base import GridSpec1D
from src.sirm_rom.models.linear import LinearModel
from src.sirm_rom.models.periodic import make_advection_diffusion
from src.sirm_rom.rom.basis import EnergyCriterion
from src.sirm_rom.services.dirm import dirm_solve, effective_dimension, equal_partition
from src.sirm_rom.services.sirm import SirmConfig
from src.sirm_rom.solvers.integrators import IntegratorConfig, integrate_full
from src.sirm_rom.utils.helpers import distance_series


def _config(**changes) -> SirmConfig:
    settings = dict(criterion=EnergyCriterion(eta=1e-8), m=6, epsilon=1e-10, max_iterations=5)
    settings.update(changes)
    return SirmConfig(**settings)


class TestPartition:
    """Test cases for partition helpers."""

    def test_equal_partition(self):
        """Test contiguous equal blocks."""
        assert equal_partition(500, 25) == [20] * 25
        with pytest.raises(ModelConfigurationError):
            equal_partition(500, 7)

    def test_effective_dimension(self):
        """Test one full block plus the reduced others."""
        assert effective_dimension([20] * 25, 4) == 116
        assert effective_dimension([20] * 25, 3) == 92
        assert effective_dimension([10] * 4, 3) == 19


class TestDirmSolve:
    """Test cases for dirm_solve."""

    def test_single_block_is_the_full_model(self):
        """Test that one subsystem reproduces the full solution."""
        rng = np.random.default_rng(0)
        matrix = -np.eye(6) + 0.1 * rng.standard_normal((6, 6))
        model = LinearModel(rng.standard_normal(6), stiff_matrix=matrix)
        integ = IntegratorConfig(dt=0.01, t_end=0.2)
        reference = integrate_full(model, integ)
        final, report = dirm_solve(model, [6], _config(), integ, reference=reference)
        assert report.converged
        assert report.final_k == 6
        assert distance_series(final, reference).sup < 1e-10

    def test_decoupled_blocks_are_exact(self):
        """Test that subsystems without coupling are solved exactly in the first sweep."""
        rng = np.random.default_rng(1)
        blocks = [-np.eye(5) + 0.2 * rng.standard_normal((5, 5)) for _ in range(4)]
        model = LinearModel(rng.standard_normal(20), stiff_matrix=block_diag(*blocks))
        integ = IntegratorConfig(dt=0.01, t_end=0.1)
        reference = integrate_full(model, integ)
        final, report = dirm_solve(model, [5] * 4, _config(), integ, 3, reference=reference)
        assert report.records[0].true_error < 1e-10
        assert report.final_k == effective_dimension([5] * 4, 3)
        assert distance_series(final, reference).sup < 1e-10

    def test_coupled_benchmark_runs(self):
        """Test a few sweeps on a coupled advection-diffusion problem."""
        model = make_advection_diffusion(GridSpec1D(40), 0.5, 1e-2)
        integ = IntegratorConfig(dt=1e-3, t_end=0.05, record_every=10)
        final, report = dirm_solve(model, equal_partition(40, 4), _config(max_iterations=3), integ)
        assert final.n_samples == 6
        assert np.all(np.isfinite(final.states))
        np.testing.assert_allclose(final.initial_state, model.initial_state)
        assert 1 <= report.iterations <= 3
        assert all(record.k == 22 for record in report.records)

    def test_partition_must_cover_state(self):
        """Test rejection of partitions that do not sum to n."""
        model = LinearModel(np.ones(6), stiff_matrix=-np.eye(6))
        with pytest.raises(ModelConfigurationError):
            dirm_solve(model, [3, 2], _config(), IntegratorConfig(dt=0.1, t_end=1.0))
