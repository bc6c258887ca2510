"""
Benchmark command-line interface for SIRM-ROM.

This module wires the experiment service and handlers together, runs experiment files and
writes their outputs: ``sirm-bench run <config> [--out-dir DIR] [--single-thread]
[--paper-scale] [--seed N] [--log-level LEVEL]``.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, MutableMapping, Optional, Sequence

from .core.config import config
from .core.exceptions import ConfigParseError, ExperimentNotFoundError, ScalingFitError
from .core.experiment_config import ExperimentConfig, load_experiment_config
from .handlers.experiment_handlers import ExperimentHandlers
from .models.cavity import CavityModel
from .services.experiment_service import ExperimentService, RunResult, posterior_correlation
from .utils.formatters import ResultFormatter, run_id
from .utils.helpers import setup_logging
from .utils.validators import OutputDirectoryValidator, validate_sweep

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_ALL_FAILED = 2

THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class BenchRunner:
    """Runner class executing experiment files."""

    def __init__(
        self,
        out_dir: Optional[str] = None,
        single_thread: bool = False,
        paper_scale: bool = False,
        seed: Optional[int] = None,
        max_workers: Optional[int] = None,
    ):
        """
        Initialize the runner.

        Args:
            out_dir: Output directory overriding the experiment file
            single_thread: Run sweep points sequentially
            paper_scale: Use the 129x129, T=50 cavity configuration
            seed: Random seed overriding the experiment file
            max_workers: Worker threads for concurrent sweeps
        """
        self.out_dir = out_dir
        self.paper_scale = paper_scale
        self.seed = seed
        self.service = ExperimentService(single_thread=single_thread, max_workers=max_workers)
        self.handlers = ExperimentHandlers(self.service)
        self.formatter = ResultFormatter()
        self.logger = logging.getLogger(__name__)

    def prepare(self, cfg: ExperimentConfig) -> ExperimentConfig:
        """
        Resolve the output directory, seed and benchmark defaults of an experiment.

        Raises:
            ConfigParseError: If the output directory is unusable or a sweep list of a
                sweeping method is empty
        """
        out_dir = self.out_dir or cfg.out_dir
        if not OutputDirectoryValidator.is_valid(out_dir):
            raise ConfigParseError(OutputDirectoryValidator.get_error_message(out_dir))
        empty = validate_sweep(cfg.sweep)
        if empty and cfg.method == "full":
            self.logger.info(f"Full run ignores empty sweep list(s): {', '.join(empty)}")
            cfg = replace(
                cfg, sweep={key: values for key, values in cfg.sweep.items() if values}
            )
        elif empty:
            raise ConfigParseError(
                f"Empty sweep list(s): {', '.join(empty)}", cfg.source_path
            )
        resolved = cfg.with_defaults(self.paper_scale)
        resolved.out_dir = out_dir
        if self.seed is not None:
            resolved.seed = self.seed
        return resolved

    def run_experiment(self, cfg: ExperimentConfig) -> int:
        """
        Execute an experiment and write its outputs.

        Args:
            cfg: Parsed experiment configuration

        Returns:
            int: Exit status (0 if at least one run succeeded, 2 if every run failed)

        Raises:
            ConfigParseError: If the configuration cannot be executed
        """
        resolved = self.prepare(cfg)
        out_dir = Path(resolved.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.logger.info(f"🚀 Experiment {resolved.name} ({resolved.kind}) -> {out_dir}")

        if resolved.kind == "scaling":
            return self._run_scaling(resolved, out_dir)

        points = resolved.sweep_points()
        results = self.service.run_sweep(points, self.handlers.handle_run)
        for result in results:
            self.write_outputs(result, out_dir, single=len(results) == 1)

        rows = [result.row.as_dict() for result in results]
        path = self.formatter.write_results(rows, out_dir / "results.csv")
        self.logger.info(f"💾 Wrote {len(rows)} result row(s) to {path}")
        self.logger.info("📊 Summary:\n" + self.formatter.format_summary_table(rows))

        if not any(result.row.ok for result in results):
            self.logger.error("❌ Every sweep point failed")
            return EXIT_ALL_FAILED
        return EXIT_OK

    def write_outputs(self, result: RunResult, out_dir: Path, single: bool = True) -> None:
        """Write the per-run files of one sweep point."""
        name = run_id(result.point.name)
        point = result.point
        if result.convergence is not None:
            report = result.convergence
            self.formatter.write_convergence(report, out_dir / f"convergence_{name}.csv")
            if point.write_spectra and report.singular_values:
                self.formatter.write_spectra(report, out_dir / f"spectrum_{name}.csv")
            if result.reference is not None and len(report.sample_trajectories) > 1:
                records = posterior_correlation(report, result.reference)
                self.formatter.write_posterior(records, out_dir / f"posterior_{name}.csv")
        if result.local is not None:
            self.formatter.write_local_report(result.local, out_dir / f"local_{name}.csv")

        model = result.model
        if point.write_fields and isinstance(model, CavityModel) and result.trajectory is not None:
            field_dir = out_dir if single else out_dir / name
            final = result.trajectory.final_state
            self.formatter.write_centerlines(model, final, field_dir)
            h = model.spec.h
            self.formatter.write_field(
                model.stream_function(final), h, field_dir / "psi_final.txt"
            )
            self.formatter.write_field(model.vorticity(final), h, field_dir / "omega_final.txt")

    def _run_scaling(self, cfg: ExperimentConfig, out_dir: Path) -> int:
        sizes: Sequence[int] = cfg.sweep.get("grid_sizes") or config.SCALING_GRID_SIZES
        plain = replace(cfg, sweep={})
        try:
            study = self.handlers.handle_scaling(plain, sizes)
        except ScalingFitError as e:
            self.logger.error(f"❌ Scaling study failed: {e}")
            return EXIT_ALL_FAILED
        path = self.formatter.write_scaling(study, out_dir / "scaling.csv")
        self.logger.info(f"💾 Wrote {path}")
        for method, exponent in study.exponents.items():
            self.logger.info(f"📊 {method}: time ~ n^{exponent:.2f}")
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of ``sirm-bench``."""
    parser = argparse.ArgumentParser(
        prog="sirm-bench", description="Run SIRM reduced-order modeling benchmarks"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", help="Run an experiment file")
    run.add_argument("config", help="Experiment file (INI)")
    run.add_argument("--out-dir", default=None, help="Output directory")
    run.add_argument(
        "--single-thread", action="store_true", help="Sequential, deterministic execution"
    )
    run.add_argument(
        "--paper-scale", action="store_true", help="Extended 129x129 cavity configuration"
    )
    run.add_argument("--seed", type=int, default=None, help="Random seed")
    run.add_argument("--log-level", default=None, help="Log level (default: SIRM_LOG_LEVEL)")
    return parser


def pin_threads(environ: Optional[MutableMapping[str, str]] = None) -> List[str]:
    """Limit BLAS thread pools to one thread; returns the variables that were set."""
    if environ is None:
        environ = os.environ
    changed = []
    for name in THREAD_ENV_VARS:
        if environ.get(name) != "1":
            environ[name] = "1"
            changed.append(name)
    return changed


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the benchmark CLI."""
    args = build_parser().parse_args(argv)
    logger = setup_logging(level=args.log_level)
    if args.single_thread:
        pin_threads()

    try:
        cfg = load_experiment_config(args.config)
        runner = BenchRunner(
            out_dir=args.out_dir,
            single_thread=args.single_thread,
            paper_scale=args.paper_scale,
            seed=args.seed,
        )
        return runner.run_experiment(cfg)
    except (ConfigParseError, ExperimentNotFoundError) as e:
        logger.error(f"❌ {e}")
        return EXIT_CONFIG_ERROR
    except KeyboardInterrupt:
        logger.info("🛑 Run stopped by user")
        return EXIT_ALL_FAILED


if __name__ == "__main__":
    sys.exit(main())
