"""
Formatting utilities for SIRM-ROM.

This module writes result tables, convergence records and field dumps, and renders the
markdown summary shown after a run.
"""

import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from ..core.config import config
from ..models.cavity import CavityModel
from ..models.reference import compare_centerlines, missing_contour_levels

logger = logging.getLogger(__name__)

ERROR_NORM_NOTE = (
    "# error_sup/error_final: unweighted L2 norm over grid values at recorded times, "
    "sup over time"
)
FLOAT_FORMAT = "%.12e"
VOLATILE_COLUMNS = ("wall_time_s", "reference_wall_time_s", "avg_wall_time_s")


def run_id(name: str) -> str:
    """File-name-safe identifier of a run."""
    return re.sub(r"[^A-Za-z0-9_.=,-]+", "_", name).strip("_") or "run"


def _write_frame(frame: pd.DataFrame, path: Path, note: str = "") -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if note:
            handle.write(note + "\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"💾 Wrote {path}")
    return path


def read_table(path: Path) -> pd.DataFrame:
    """Read a table written by this module."""
    return pd.read_csv(path, comment="#")


class ResultFormatter:
    """Utility class writing SIRM-ROM outputs."""

    @staticmethod
    def write_results(rows: List[Dict[str, Any]], path: Path) -> Path:
        """
        Write the result rows as a self-describing CSV.

        Args:
            rows: Flat result rows (``section.key`` columns plus metrics)
            path: Output file

        Returns:
            Path: The written file
        """
        frame = pd.DataFrame(rows)
        front = [column for column in ("experiment.name", "method", "status") if column in frame]
        frame = frame[front + [column for column in frame.columns if column not in front]]
        return _write_frame(frame, path, ERROR_NORM_NOTE)

    @staticmethod
    def write_convergence(report: Any, path: Path) -> Path:
        """Per-iteration records of a SIRM or DIRM run."""
        frame = pd.DataFrame(
            [
                {
                    "iteration": record.iteration,
                    "k": record.k,
                    "truncation_estimate": record.truncation_estimate,
                    "successive_diff": record.successive_diff,
                    "true_error": record.true_error,
                    "energy_fraction": record.energy_fraction,
                    "wall_time_s": record.wall_time,
                }
                for record in report.records
            ]
        )
        return _write_frame(frame, path)

    @staticmethod
    def write_local_report(report: Any, path: Path) -> Path:
        """Per-subinterval records of a local SIRM run."""
        frame = pd.DataFrame(
            [
                {
                    "subinterval": record.index,
                    "iterations": record.iterations,
                    "k_prime": record.k_prime,
                    "successive_diff": record.successive_diff,
                    "endpoint_norm": record.endpoint_norm,
                    "trial": record.trial_kind,
                    "converged": record.converged,
                    "wall_time_s": record.wall_time,
                }
                for record in report.records
            ]
        )
        return _write_frame(frame, path)

    @staticmethod
    def write_spectra(report: Any, path: Path) -> Path:
        """Singular values of every iteration with their cumulative energy."""
        rows = []
        for iteration, values in enumerate(report.singular_values, start=1):
            energy = np.asarray(values) ** 2
            cumulative = np.cumsum(energy) / energy.sum() if energy.sum() > 0 else energy
            for index, (value, fraction) in enumerate(zip(values, cumulative), start=1):
                rows.append(
                    {
                        "iteration": iteration,
                        "index": index,
                        "singular_value": float(value),
                        "cumulative_energy": float(fraction),
                    }
                )
        return _write_frame(pd.DataFrame(rows), path)

    @staticmethod
    def write_posterior(records: Sequence[Any], path: Path) -> Path:
        """Successive-iterate distance and true error over time, with their correlation."""
        rows = []
        for record in records:
            for t, estimate, error in zip(record.times, record.estimate, record.error):
                rows.append(
                    {
                        "iteration": record.iteration,
                        "time": float(t),
                        "posterior_estimate": float(estimate),
                        "true_error": float(error),
                        "pearson_r": record.correlation,
                    }
                )
        return _write_frame(pd.DataFrame(rows), path)

    @staticmethod
    def write_scaling(study: Any, path: Path) -> Path:
        """Scaling timings with the fitted exponent of each method."""
        frame = pd.DataFrame(study.rows)
        frame["exponent"] = frame["method"].map(study.exponents)
        return _write_frame(frame, path)

    @staticmethod
    def write_centerlines(model: CavityModel, x: np.ndarray, out_dir: Path) -> List[Path]:
        """
        Write u(0.5, y) and v(x, 0.5) of a cavity state.

        When published profiles exist for the Reynolds number, the reference velocities and
        the model velocities at the reference stations are written alongside.

        Returns:
            List of the written files
        """
        y_nodes, u, x_nodes, v = model.centerline_velocities(x)
        paths = [
            _write_frame(pd.DataFrame({"y": y_nodes, "u": u}), out_dir / "centerline_u.csv"),
            _write_frame(pd.DataFrame({"x": x_nodes, "v": v}), out_dir / "centerline_v.csv"),
        ]
        comparison = compare_centerlines(model, x)
        if comparison is None:
            return paths
        u_frame = pd.DataFrame(
            {"y": comparison.y, "u_reference": comparison.u_reference, "u": comparison.u_model}
        )
        v_frame = pd.DataFrame(
            {"x": comparison.x, "v_reference": comparison.v_reference, "v": comparison.v_model}
        )
        paths.append(_write_frame(u_frame, out_dir / "centerline_u_reference.csv"))
        paths.append(_write_frame(v_frame, out_dir / "centerline_v_reference.csv"))
        du, dv = comparison.max_deviation
        logger.info(
            f"📐 Re = {comparison.reynolds:g} centerlines vs published profiles: "
            f"max |du| = {du:.4f}, max |dv| = {dv:.4f}"
        )
        missing = missing_contour_levels(model, x)
        if missing:
            logger.info(f"Stream function misses published contour levels {missing}")
        return paths

    @staticmethod
    def write_field(field: np.ndarray, spacing: float, path: Path) -> Path:
        """
        Dump a 2D field as a plain-text matrix with a 2-line header (dims, spacing).

        Row j holds the nodes at y = j h.
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        rows, columns = field.shape
        np.savetxt(
            path,
            field,
            fmt="%.12e",
            header=f"{rows} {columns}\n{spacing:.12e}",
            comments="# ",
        )
        return path

    @staticmethod
    def format_summary_table(rows: List[Dict[str, Any]]) -> str:
        """
        Format result rows into a markdown table.

        Args:
            rows: Flat result rows

        Returns:
            str: Markdown table truncated to MAX_DISPLAY_ROWS
        """
        if not rows:
            return "No results"

        headers = ["run", "method", "k", "iterations", "error_sup", "wall_time_s", "status"]
        result = "| " + " | ".join(headers) + " |\n"
        result += "| " + " | ".join(["---"] * len(headers)) + " |\n"

        for row in rows[: config.MAX_DISPLAY_ROWS]:
            cells = [str(row.get("experiment.name", ""))]
            for key in headers[1:]:
                value = row.get(key, "")
                if isinstance(value, (float, np.floating)):
                    cells.append(f"{value:.3e}")
                else:
                    cells.append(str(value))
            result += "| " + " | ".join(cells) + " |\n"

        if len(rows) > config.MAX_DISPLAY_ROWS:
            result += f"\n... and {len(rows) - config.MAX_DISPLAY_ROWS} more rows"

        return result
