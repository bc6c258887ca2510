"""
Unit tests for the benchmark command-line interface.
"""

import pytest

from src.sirm_rom.cli import (
    EXIT_ALL_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    THREAD_ENV_VARS,
    build_parser,
    main,
    pin_threads,
)
from src.sirm_rom.utils.formatters import read_table

SMALL_SIRM = """\
[experiment]
name = small
kind = adv_diff
method = sirm

[model]
n_points = 32
t_end = 0.02
dt = 1e-3

[sirm]
m = 5
trial = constant
eta = 1e-10
epsilon = 1e-6
max_iterations = 5
"""


@pytest.fixture(autouse=True)
def pinned_threads(monkeypatch):
    for name in THREAD_ENV_VARS:
        monkeypatch.setenv(name, "1")


def _write(tmp_path, text: str, name: str = "exp.cfg") -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(config_path: str, out_dir) -> int:
    return main(["run", config_path, "--out-dir", str(out_dir), "--single-thread"])


class TestParser:
    """Test cases for the argument parser."""

    def test_run_arguments(self):
        """Test the options of the run command."""
        args = build_parser().parse_args(
            ["run", "exp.cfg", "--seed", "3", "--paper-scale", "--out-dir", "out"]
        )
        assert args.command == "run"
        assert args.config == "exp.cfg"
        assert args.seed == 3
        assert args.paper_scale and not args.single_thread
        assert args.out_dir == "out"
        assert args.log_level is None

    def test_command_required(self):
        """Test that a command must be given."""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_pin_threads(self):
        """Test that thread variables are set once."""
        environ = {"OMP_NUM_THREADS": "8"}
        assert pin_threads(environ) == list(THREAD_ENV_VARS)
        assert all(environ[name] == "1" for name in THREAD_ENV_VARS)
        assert pin_threads(environ) == []


class TestMain:
    """Test cases for running experiment files."""

    def test_missing_file(self, tmp_path):
        """Test the configuration exit status for an unreadable file."""
        assert _run(str(tmp_path / "missing.cfg"), tmp_path / "out") == EXIT_CONFIG_ERROR

    def test_invalid_file(self, tmp_path):
        """Test the configuration exit status for a malformed file."""
        path = _write(tmp_path, SMALL_SIRM + "\n[solver]\ntol = 1\n")
        assert _run(path, tmp_path / "out") == EXIT_CONFIG_ERROR

    def test_empty_sweep(self, tmp_path):
        """Test rejection of a sweep key without values."""
        path = _write(tmp_path, SMALL_SIRM + "\n[sweep]\neta = ,\n")
        assert _run(path, tmp_path / "out") == EXIT_CONFIG_ERROR

    def test_empty_sweep_with_full_method(self, tmp_path):
        """Test that a full run with empty sweep lists is a single reference run."""
        text = SMALL_SIRM.replace("method = sirm", "method = full") + "\n[sweep]\neta = ,\n"
        out = tmp_path / "out"
        assert _run(_write(tmp_path, text), out) == EXIT_OK
        results = read_table(out / "results.csv")
        assert len(results) == 1
        assert list(results["status"]) == ["ok"]

    def test_unusable_output_directory(self, tmp_path):
        """Test rejection of an output location that is a file."""
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        assert _run(_write(tmp_path, SMALL_SIRM), blocker) == EXIT_CONFIG_ERROR

    def test_sirm_run_writes_outputs(self, tmp_path):
        """Test a small SIRM run and its files."""
        out = tmp_path / "out"
        assert _run(_write(tmp_path, SMALL_SIRM), out) == EXIT_OK
        results = read_table(out / "results.csv")
        assert list(results["status"]) == ["ok"]
        assert results["experiment.name"].iloc[0] == "small"
        assert (out / "convergence_small.csv").exists()
        assert (out / "spectrum_small.csv").exists()
        assert (out / "posterior_small.csv").exists()

    def test_sweep_writes_one_row_per_point(self, tmp_path):
        """Test a two-point sweep."""
        out = tmp_path / "out"
        path = _write(tmp_path, SMALL_SIRM + "\n[sweep]\neta = 1e-6, 1e-10\n")
        assert _run(path, out) == EXIT_OK
        assert len(read_table(out / "results.csv")) == 2

    def test_every_point_failing(self, tmp_path):
        """Test the failure status when no point succeeds."""
        text = SMALL_SIRM.replace("method = sirm", "method = coarse").replace(
            "n_points = 32", "n_points = 64"
        )
        text += "coarse_factor = 7\n"
        out = tmp_path / "out"
        assert _run(_write(tmp_path, text), out) == EXIT_ALL_FAILED
        results = read_table(out / "results.csv")
        assert results["status"].iloc[0].startswith("error: ModelConfigurationError")

    def test_cavity_fields(self, tmp_path):
        """Test the centerline and field files of a cavity run."""
        text = (
            "[experiment]\nname = box\nkind = cavity\nmethod = full\n"
            "[model]\nn_side = 17\nt_end = 0.02\ndt = 1e-2\nrecord_every = 1\n"
        )
        out = tmp_path / "out"
        assert _run(_write(tmp_path, text), out) == EXIT_OK
        for name in ("centerline_u.csv", "centerline_v.csv", "psi_final.txt", "omega_final.txt"):
            assert (out / name).exists()

    def test_scaling_needs_distinct_sizes(self, tmp_path):
        """Test the failure status of a scaling study with repeated sizes."""
        text = "[experiment]\nname = s\nkind = scaling\n[sweep]\ngrid_sizes = 65, 65\n"
        assert _run(_write(tmp_path, text), tmp_path / "out") == EXIT_ALL_FAILED
