"""
Experiment handlers for SIRM-ROM.

This module turns parsed experiment points into models, integrator settings and solver
configurations, and routes each point to the service operation of its method.
"""

import importlib
import logging
from dataclasses import replace
from typing import Any, Dict, Hashable, Optional, Sequence

import numpy as np

from ..core.config import config
from ..core.exceptions import ExperimentNotFoundError, ModelConfigurationError
from ..core.experiment_config import ExperimentConfig
from ..models.base import CavitySpec, FullModel, GridSpec1D, Trajectory
from ..models.cavity import CavityModel, make_cavity
from ..models.periodic import make_advection_diffusion, make_burgers
from ..rom.basis import EnergyCriterion
from ..services.dirm import effective_dimension, equal_partition
from ..services.experiment_service import (
    ExperimentService,
    ResultRow,
    RunResult,
    ScalingStudy,
    compare_against_reference,
    minimal_dimension_search,
    scaling_study,
)
from ..services.local_sirm import PartitionConfig
from ..services.sirm import SirmConfig, TrialSpec
from ..solvers.integrators import IntegratorConfig
from ..utils.helpers import nearest_divisor


class ExperimentHandlers:
    """Handler class routing experiment points to the experiment service."""

    def __init__(self, service: ExperimentService):
        """
        Initialize the experiment handlers.

        Args:
            service: Experiment service executing the runs
        """
        self.service = service
        self.logger = logging.getLogger(__name__)

    # Translation of experiment points

    def build_model(self, point: ExperimentConfig) -> FullModel:
        """
        Build the full model of an experiment point.

        Raises:
            ExperimentNotFoundError: If the experiment kind is unknown
        """
        params = point.model
        kind = point.kind
        if kind == "adv_diff":
            return make_advection_diffusion(
                GridSpec1D(int(params["n_points"])), float(params["c"]), float(params["nu"])
            )
        elif kind == "burgers":
            return make_burgers(GridSpec1D(int(params["n_points"])), float(params["nu"]))
        elif kind in ("cavity", "scaling"):
            spec = CavitySpec(
                n_side=int(params["n_side"]),
                reynolds=float(params["reynolds"]),
                lid_speed=float(params["lid_speed"]),
                poisson_tol=float(params["poisson_tol"]),
                poisson_preconditioner=str(params["poisson_preconditioner"]),
            )
            return make_cavity(spec)
        elif kind == "custom":
            return self._custom_model(point)
        else:
            self.logger.error(f"❌ Experiment kind not found: {kind}")
            raise ExperimentNotFoundError(kind)

    def _custom_model(self, point: ExperimentConfig) -> FullModel:
        module_name, _, function_name = (point.factory or "").partition(":")
        if not module_name or not function_name:
            raise ModelConfigurationError(
                f"Factory '{point.factory}' is not of the form module:function", "factory"
            )
        try:
            factory = getattr(importlib.import_module(module_name), function_name)
        except (ImportError, AttributeError) as e:
            raise ModelConfigurationError(
                f"Cannot load factory '{point.factory}': {e}", "factory"
            ) from e
        model = factory(dict(point.model))
        if not isinstance(model, FullModel):
            raise ModelConfigurationError(
                f"Factory '{point.factory}' returned {type(model).__name__}, not a FullModel",
                "factory",
            )
        return model

    def integrator_config(self, point: ExperimentConfig) -> IntegratorConfig:
        """Integrator settings of a point; scaling runs use the CFL-consistent step."""
        params = point.model
        for key in ("t_end", "dt"):
            if key not in params:
                raise ModelConfigurationError(f"Missing model parameter '{key}'", key)
        dt = float(params["dt"])
        if point.kind == "scaling":
            dt = config.scaling_dt(int(params["n_side"]))
        return IntegratorConfig(
            dt=dt, t_end=float(params["t_end"]), record_every=int(params.get("record_every", 1))
        )

    def trial_spec(self, point: ExperimentConfig, model: FullModel, kind: str) -> TrialSpec:
        """Trial description for a trial tag of the experiment file."""
        params = point.sirm
        if kind in ("constant", "constant_ic"):
            return TrialSpec()
        if kind != "coarse_model":
            raise ModelConfigurationError(f"Unknown trial '{kind}'", "trial")

        fourier_modes = None if isinstance(model, CavityModel) else params.get("fourier_modes")
        coarse_points = params.get("coarse_points")
        if coarse_points:
            # Step proportional to the point ratio.
            return TrialSpec(
                kind="coarse_model",
                coarse_points=int(coarse_points),
                fourier_modes=fourier_modes,
            )
        coarse_dt: Optional[float] = params.get("coarse_dt")
        return TrialSpec(
            kind="coarse_model",
            coarse_factor=int(params.get("coarse_factor", 1)),
            coarse_dt=coarse_dt,
            fourier_modes=fourier_modes,
        )

    def sirm_config(self, point: ExperimentConfig, model: FullModel) -> SirmConfig:
        """Global SIRM settings of a point."""
        params = point.sirm
        k_fixed = params.get("k_fixed")
        eta = float(params.get("eta", 1e-8))
        criterion = EnergyCriterion.fixed(int(k_fixed), eta) if k_fixed else EnergyCriterion(eta)
        return SirmConfig(
            criterion=criterion,
            m=int(params["m"]),
            epsilon=float(params["epsilon"]),
            max_iterations=int(params.get("max_iterations", config.SIRM_MAX_ITERATIONS)),
            gamma=float(params.get("gamma", config.DEFAULT_GAMMA)),
            trial=self.trial_spec(point, model, str(params.get("trial", "constant"))),
            reduced_dt=params.get("reduced_dt"),
            ensemble=str(params.get("ensemble", "states_and_tangents")),
            split_fields=bool(params.get("split_fields", False)),
        )

    def partition_config(
        self, point: ExperimentConfig, model: FullModel, integ: IntegratorConfig
    ) -> PartitionConfig:
        """
        Local SIRM settings of a point.

        ``m_total`` selects the subinterval count M as the divisor of the step count nearest to
        (m_total - 1)/(m' - 1); otherwise ``n_subintervals`` is used.
        """
        params = point.local
        m_prime = int(params["m_prime"])
        m_total = params.get("m_total")
        if m_total:
            n_subintervals = nearest_divisor(integ.n_steps, (int(m_total) - 1) / (m_prime - 1))
        else:
            n_subintervals = int(params["n_subintervals"])

        strategy = str(params.get("trial", "time_history"))
        fallback = str(params.get("fallback_trial", "constant"))
        coarse = "coarse_model" in (strategy, fallback)
        inner = replace(
            self.sirm_config(point, model),
            m=m_prime,
            epsilon=float(params.get("epsilon", point.sirm["epsilon"])),
            max_iterations=int(params.get("max_iterations", config.LOCAL_MAX_ITERATIONS)),
            trial=self.trial_spec(point, model, "coarse_model") if coarse else TrialSpec(),
        )
        return PartitionConfig(
            n_subintervals=n_subintervals,
            m_prime=m_prime,
            inner=inner,
            trial_strategy=strategy,
            fallback_trial=fallback,
            basis_method=str(params.get("basis", "auto")),
        )

    @staticmethod
    def reference_key(point: ExperimentConfig) -> Hashable:
        """Cache key of the full-model reference shared by points with equal model settings."""
        return (point.kind, point.factory, tuple(sorted(point.model.items())))

    # Method routing

    def handle_run(self, point: ExperimentConfig) -> RunResult:
        """
        Route one experiment point to its method.

        Args:
            point: Experiment point with defaults applied

        Returns:
            RunResult with the self-describing result row

        Raises:
            ExperimentNotFoundError: If the method is unknown
        """
        self.logger.info(f"📞 Running {point.name}: {point.kind} / {point.method}")
        model = self.build_model(point)
        integ = self.integrator_config(point)
        reference, reference_time = self.service.reference(
            self.reference_key(point), model, integ
        )
        metrics: Dict[str, Any] = {
            "method": point.method,
            "n": model.dim,
            "reference_wall_time_s": reference_time,
        }
        result = RunResult(
            point=point,
            row=ResultRow(config=point.to_flat(), metrics=metrics),
            reference=reference,
            model=model,
        )

        if point.method == "full":
            self.handle_full(result, reference, reference_time)
        elif point.method == "sirm":
            self.handle_sirm(result, model, integ, reference)
        elif point.method == "local_sirm":
            self.handle_local_sirm(result, model, integ, reference)
        elif point.method == "dirm":
            self.handle_dirm(result, model, integ, reference)
        elif point.method == "coarse":
            self.handle_coarse(result, model, integ, reference)
        else:
            self.logger.error(f"❌ Method not found: {point.method}")
            raise ExperimentNotFoundError(point.method)

        if result.trajectory is not None:
            errors = compare_against_reference(result.trajectory, reference)
            metrics.update(error_sup=errors.sup, error_final=errors.final)
        self.logger.info(f"📊 {point.name}: {self._summary(metrics)}")
        return result

    def handle_full(self, result: RunResult, reference: Trajectory, elapsed: float) -> None:
        result.trajectory = reference
        result.row.metrics.update(k=result.row.metrics["n"], iterations=0, wall_time_s=elapsed)

    def handle_sirm(
        self,
        result: RunResult,
        model: FullModel,
        integ: IntegratorConfig,
        reference: Trajectory,
    ) -> None:
        point = result.point
        cfg = self.sirm_config(point, model)
        trajectory, report, elapsed = self.service.run_sirm(model, cfg, integ, reference)
        result.trajectory, result.convergence = trajectory, report
        result.row.metrics.update(
            k=report.final_k,
            iterations=report.iterations,
            converged=report.converged,
            truncation_estimate=report.records[-1].truncation_estimate,
            wall_time_s=elapsed,
        )
        if point.sirm.get("dimension_search"):
            threshold = float(
                point.sirm.get("error_threshold", config.DIMENSION_SEARCH_THRESHOLD)
            )
            k_min, _ = minimal_dimension_search(
                model, cfg, integ, reference, range(1, 2 * cfg.m + 1), threshold
            )
            result.row.metrics["k_minimal"] = k_min

    def handle_local_sirm(
        self,
        result: RunResult,
        model: FullModel,
        integ: IntegratorConfig,
        reference: Trajectory,
    ) -> None:
        part = self.partition_config(result.point, model, integ)
        trajectory, report, elapsed = self.service.run_local_sirm(model, part, integ, reference)
        result.trajectory, result.local = trajectory, report
        result.row.metrics.update(
            k=report.max_k_prime,
            iterations=sum(record.iterations for record in report.records),
            avg_iterations=report.avg_iterations,
            n_subintervals=part.n_subintervals,
            m_prime=part.m_prime,
            m_total=part.m_total,
            converged=all(record.converged for record in report.records),
            wall_time_s=elapsed,
        )

    def handle_dirm(
        self,
        result: RunResult,
        model: FullModel,
        integ: IntegratorConfig,
        reference: Trajectory,
    ) -> None:
        params = result.point.sirm
        partition = equal_partition(model.dim, int(params.get("dirm_blocks", config.DIRM_BLOCKS)))
        modes = params.get("dirm_modes") or config.dirm_modes(
            float(result.point.model.get("nu", 0.0))
        )
        cfg = self.sirm_config(result.point, model)
        trajectory, report, elapsed = self.service.run_dirm(
            model, partition, cfg, integ, int(modes), reference
        )
        result.trajectory, result.convergence = trajectory, report
        result.row.metrics.update(
            k=effective_dimension(partition, int(modes)),
            modes_per_block=int(modes),
            iterations=report.iterations,
            converged=report.converged,
            wall_time_s=elapsed,
        )

    def handle_coarse(
        self,
        result: RunResult,
        model: FullModel,
        integ: IntegratorConfig,
        reference: Trajectory,
    ) -> None:
        point = result.point
        trial = self.trial_spec(point, model, "coarse_model")
        trajectory, elapsed = self.service.run_coarse(model, trial, integ, int(point.sirm["m"]))
        result.trajectory = trajectory
        result.row.metrics.update(
            coarse_factor=trial.coarse_factor,
            coarse_points=trial.coarse_points,
            iterations=0,
            wall_time_s=elapsed,
        )

    def handle_scaling(self, cfg: ExperimentConfig, sizes: Sequence[int]) -> ScalingStudy:
        """
        Time the full model and local SIRM over grid sizes.

        Args:
            cfg: Scaling experiment with defaults applied
            sizes: Grid sizes n_side

        Returns:
            ScalingStudy with the fitted exponents
        """

        def timer(n_side: int, method: str) -> float:
            point = replace(cfg, model={**cfg.model, "n_side": n_side}, method=method)
            model = self.build_model(point)
            integ = self.integrator_config(point)
            if method == "full":
                _, elapsed = self.service.run_full(model, integ)
            else:
                part = self.partition_config(point, model, integ)
                _, _, elapsed = self.service.run_local_sirm(model, part, integ)
            return elapsed

        return scaling_study(sizes, timer)

    @staticmethod
    def _summary(metrics: Dict[str, Any]) -> str:
        parts = []
        for key in ("k", "iterations", "error_sup", "wall_time_s"):
            value = metrics.get(key)
            if isinstance(value, (float, np.floating)):
                parts.append(f"{key} = {value:.3e}")
            elif value is not None:
                parts.append(f"{key} = {value}")
        return ", ".join(parts)
