"""
Configuration module for SIRM-ROM.

This module centralizes the benchmark defaults and environment variable handling.
"""

import os
from typing import Any, Dict


class SirmRomConfig:
    """Configuration class for SIRM-ROM."""

    # Package configuration
    PACKAGE_NAME = "sirm-rom"
    PACKAGE_VERSION = "1.0.0"

    # General iteration settings
    DEFAULT_GAMMA = 1.0
    GRAM_SCHMIDT_DROP_TOL = 1e-10
    GRAM_SCHMIDT_AUTO_MAX_SAMPLES = 5
    DIVERGENCE_FACTOR = 100.0
    DIVERGENCE_WINDOW = 3
    LOCAL_MAX_ITERATIONS = 10
    SIRM_MAX_ITERATIONS = 10
    DIMENSION_SEARCH_THRESHOLD = 1e-3

    # Poisson solver
    POISSON_TOL = 1e-10
    POISSON_MAX_ITERATIONS = 10000

    # Advection-diffusion benchmark
    ADV_DIFF_N_POINTS = 500
    ADV_DIFF_C = 0.5
    ADV_DIFF_NU = 1e-3
    ADV_DIFF_T_END = 0.5
    ADV_DIFF_DT = 1e-3
    ADV_DIFF_M = 51
    ADV_DIFF_COARSE_FACTOR = 25
    ADV_DIFF_COARSE_DT = 2.5e-2
    ADV_DIFF_FOURIER_MODES = 10
    ADV_DIFF_ETA = 1e-8
    ADV_DIFF_EPSILON = 1e-5
    DIRM_BLOCKS = 25

    # Burgers benchmark
    BURGERS_N_POINTS = 2000
    BURGERS_NU = 1e-3
    BURGERS_T_END = 1.0
    BURGERS_DT = 2e-4
    BURGERS_M = 101
    BURGERS_COARSE_FACTOR = 20
    BURGERS_COARSE_DT = 4e-3
    BURGERS_ETA = 1e-10
    BURGERS_EPSILON = 1e-6

    # Cavity benchmark, desk scale
    CAVITY_N_SIDE = 65
    CAVITY_REYNOLDS = 1000.0
    CAVITY_LID_SPEED = 1.0
    CAVITY_T_END = 10.0
    CAVITY_DT = 1e-2
    CAVITY_SUBINTERVALS = 50
    CAVITY_M_PRIME = 3
    CAVITY_COARSE_FACTOR = 2
    CAVITY_COARSE_DT = 2e-2
    CAVITY_EPSILON = 1e-2

    # Cavity benchmark, extended 129x129 run
    CAVITY_PAPER_N_SIDE = 129
    CAVITY_PAPER_T_END = 50.0
    CAVITY_PAPER_DT = 5e-3
    CAVITY_PAPER_SUBINTERVALS = 250
    CAVITY_PAPER_COARSE_FACTOR = 4
    CAVITY_PAPER_COARSE_DT = 2e-2

    # Scaling study
    SCALING_GRID_SIZES = (65, 97, 129)
    SCALING_T_END = 5.0
    SCALING_REFERENCE_DT = 1e-2
    SCALING_REFERENCE_INTERVALS = 64

    # Display configuration
    MAX_DISPLAY_ROWS = 20

    # Environment variables
    @property
    def log_level(self) -> str:
        """Get log level from environment with fallback to INFO."""
        return os.getenv("SIRM_LOG_LEVEL", "INFO").upper()

    @property
    def out_dir(self) -> str:
        """Get default output directory from environment."""
        return os.getenv("SIRM_OUT_DIR", "results")

    @property
    def single_thread(self) -> bool:
        """Check if deterministic single-threaded mode is forced from the environment."""
        return os.getenv("SIRM_SINGLE_THREAD", "").strip().lower() in ("1", "true", "yes", "on")

    @property
    def max_workers(self) -> int:
        """Get the sweep worker count from environment with fallback to 4."""
        try:
            return max(1, int(os.getenv("SIRM_MAX_WORKERS", "4")))
        except ValueError:
            return 4

    def scaling_dt(self, n_side: int) -> float:
        """Time step keeping the CFL number of the 65x65 reference run for a given grid."""
        return self.SCALING_REFERENCE_DT * self.SCALING_REFERENCE_INTERVALS / (n_side - 1)

    def dirm_modes(self, nu: float) -> int:
        """Per-block DIRM mode count: 3 for strongly diffusive runs, 4 otherwise."""
        return 3 if nu >= 1e-2 else 4

    def defaults_for(self, kind: str, paper_scale: bool = False) -> Dict[str, Dict[str, Any]]:
        """
        Get the default section values of a benchmark experiment.

        Args:
            kind: Experiment kind (adv_diff, burgers, cavity, scaling, custom)
            paper_scale: Use the full paper configuration for the cavity

        Returns:
            Dict of section name to key/value defaults
        """
        sirm: Dict[str, Any] = {
            "gamma": self.DEFAULT_GAMMA,
            "max_iterations": self.SIRM_MAX_ITERATIONS,
            "ensemble": "states_and_tangents",
            "split_fields": False,
            "trial": "coarse_model",
        }
        local: Dict[str, Any] = {
            "trial": "time_history",
            "fallback_trial": "constant",
            "basis": "auto",
            "max_iterations": self.LOCAL_MAX_ITERATIONS,
        }
        if kind == "adv_diff":
            model: Dict[str, Any] = {
                "n_points": self.ADV_DIFF_N_POINTS,
                "c": self.ADV_DIFF_C,
                "nu": self.ADV_DIFF_NU,
                "t_end": self.ADV_DIFF_T_END,
                "dt": self.ADV_DIFF_DT,
                "record_every": 1,
            }
            sirm.update(
                m=self.ADV_DIFF_M,
                eta=self.ADV_DIFF_ETA,
                epsilon=self.ADV_DIFF_EPSILON,
                coarse_factor=self.ADV_DIFF_COARSE_FACTOR,
                coarse_dt=self.ADV_DIFF_COARSE_DT,
                fourier_modes=self.ADV_DIFF_FOURIER_MODES,
                dirm_blocks=self.DIRM_BLOCKS,
            )
            local.update(n_subintervals=10, m_prime=3, epsilon=self.ADV_DIFF_EPSILON)
        elif kind == "burgers":
            model = {
                "n_points": self.BURGERS_N_POINTS,
                "nu": self.BURGERS_NU,
                "t_end": self.BURGERS_T_END,
                "dt": self.BURGERS_DT,
                "record_every": 50,
            }
            sirm.update(
                m=self.BURGERS_M,
                eta=self.BURGERS_ETA,
                epsilon=self.BURGERS_EPSILON,
                coarse_factor=self.BURGERS_COARSE_FACTOR,
                coarse_dt=self.BURGERS_COARSE_DT,
                fourier_modes=self.ADV_DIFF_FOURIER_MODES,
                dirm_blocks=self.DIRM_BLOCKS,
            )
            local.update(n_subintervals=20, m_prime=3, epsilon=self.BURGERS_EPSILON)
        elif kind in ("cavity", "scaling"):
            model = {
                "n_side": self.CAVITY_PAPER_N_SIDE if paper_scale else self.CAVITY_N_SIDE,
                "reynolds": self.CAVITY_REYNOLDS,
                "lid_speed": self.CAVITY_LID_SPEED,
                "t_end": self.CAVITY_PAPER_T_END if paper_scale else self.CAVITY_T_END,
                "dt": self.CAVITY_PAPER_DT if paper_scale else self.CAVITY_DT,
                "record_every": 10,
                "poisson_tol": self.POISSON_TOL,
                "poisson_preconditioner": "jacobi",
            }
            sirm.update(
                m=3,
                eta=1e-8,
                epsilon=self.CAVITY_EPSILON,
                split_fields=True,
                trial="constant",
                coarse_factor=(
                    self.CAVITY_PAPER_COARSE_FACTOR if paper_scale else self.CAVITY_COARSE_FACTOR
                ),
                coarse_dt=self.CAVITY_PAPER_COARSE_DT if paper_scale else self.CAVITY_COARSE_DT,
            )
            local.update(
                n_subintervals=(
                    self.CAVITY_PAPER_SUBINTERVALS if paper_scale else self.CAVITY_SUBINTERVALS
                ),
                m_prime=self.CAVITY_M_PRIME,
                epsilon=self.CAVITY_EPSILON,
            )
            if kind == "scaling":
                model["t_end"] = self.SCALING_T_END
        else:
            model = {}
            sirm.update(m=11, eta=1e-8, epsilon=1e-6, trial="constant")
            local.update(n_subintervals=1, m_prime=3, epsilon=1e-6)
        return {"model": model, "sirm": sirm, "local": local}


# Global configuration instance
config = SirmRomConfig()
