"""
Experiment file parsing for SIRM-ROM.

Experiment files are INI documents with the sections ``[experiment]``, ``[model]``,
``[sirm]``, ``[local]``, ``[sweep]`` and ``[output]``. Every key has a fixed type; sweep keys
hold comma-separated lists whose Cartesian product defines the sweep points.
"""

import configparser
import copy
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from .config import config
from .exceptions import ConfigParseError

EXPERIMENT_KINDS = ("adv_diff", "burgers", "cavity", "scaling", "custom")
METHODS = ("full", "sirm", "local_sirm", "dirm", "coarse")


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{raw}'")


def _parse_optional_int(raw: str) -> Optional[int]:
    return None if raw.strip().lower() in ("", "none") else int(raw)


SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "experiment": {
        "name": str,
        "kind": str,
        "method": str,
        "seed": int,
        "factory": str,
    },
    "model": {
        "n_points": int,
        "c": float,
        "nu": float,
        "n_side": int,
        "reynolds": float,
        "lid_speed": float,
        "t_end": float,
        "dt": float,
        "record_every": int,
        "poisson_tol": float,
        "poisson_preconditioner": str,
    },
    "sirm": {
        "gamma": float,
        "eta": float,
        "epsilon": float,
        "m": int,
        "max_iterations": int,
        "trial": str,
        "coarse_factor": int,
        "coarse_points": _parse_optional_int,
        "coarse_dt": float,
        "fourier_modes": int,
        "ensemble": str,
        "split_fields": _parse_bool,
        "k_fixed": _parse_optional_int,
        "reduced_dt": float,
        "dirm_blocks": int,
        "dirm_modes": _parse_optional_int,
        "error_threshold": float,
        "dimension_search": _parse_bool,
    },
    "local": {
        "n_subintervals": int,
        "m_total": _parse_optional_int,
        "m_prime": int,
        "trial": str,
        "fallback_trial": str,
        "basis": str,
        "max_iterations": int,
        "epsilon": float,
    },
    "sweep": {
        "eta": float,
        "coarse_points": int,
        "m": int,
        "m_prime": int,
        "n_subintervals": int,
        "m_total": int,
        "grid_sizes": int,
        "nu": float,
        "k": int,
    },
    "output": {
        "out_dir": str,
        "write_fields": _parse_bool,
        "write_spectra": _parse_bool,
    },
}

# Sweep key -> (section, key) it overrides in a sweep point.
SWEEP_TARGETS: Dict[str, Tuple[str, str]] = {
    "eta": ("sirm", "eta"),
    "coarse_points": ("sirm", "coarse_points"),
    "m": ("sirm", "m"),
    "m_prime": ("local", "m_prime"),
    "n_subintervals": ("local", "n_subintervals"),
    "m_total": ("local", "m_total"),
    "grid_sizes": ("model", "n_side"),
    "nu": ("model", "nu"),
    "k": ("sirm", "k_fixed"),
}

VALUE_SECTIONS = ("model", "sirm", "local")


@dataclass
class ExperimentConfig:
    """Parsed experiment description; one instance per file or per sweep point."""

    name: str
    kind: str
    method: str = "sirm"
    seed: int = 0
    factory: Optional[str] = None
    model: Dict[str, Any] = field(default_factory=dict)
    sirm: Dict[str, Any] = field(default_factory=dict)
    local: Dict[str, Any] = field(default_factory=dict)
    sweep: Dict[str, List[Any]] = field(default_factory=dict)
    out_dir: str = field(default_factory=lambda: config.out_dir)
    write_fields: bool = True
    write_spectra: bool = True
    source_path: Optional[str] = None

    def section(self, name: str) -> Dict[str, Any]:
        """Get a value section by name."""
        if name not in VALUE_SECTIONS:
            raise KeyError(name)
        return getattr(self, name)

    def with_defaults(self, paper_scale: bool = False) -> "ExperimentConfig":
        """
        Fill every value section with the benchmark defaults under the explicit values.

        Args:
            paper_scale: Use the extended 129x129 cavity defaults

        Returns:
            ExperimentConfig: New config whose sections carry the full parameter set
        """
        resolved = copy.deepcopy(self)
        defaults = config.defaults_for(self.kind, paper_scale)
        for name in VALUE_SECTIONS:
            merged = dict(defaults.get(name, {}))
            merged.update(self.section(name))
            setattr(resolved, name, merged)
        return resolved

    def sweep_points(self) -> List["ExperimentConfig"]:
        """
        Expand the sweep into point configurations.

        ``n_subintervals`` and ``m_total`` share one partition axis so that a fixed-count and
        a fixed-total row appear side by side for every other sweep value.

        Returns:
            List of ExperimentConfig with empty sweep sections
        """
        axes: List[List[Dict[Tuple[str, str], Any]]] = []
        partition_axis: List[Dict[Tuple[str, str], Any]] = []
        for key, values in self.sweep.items():
            if not values:
                continue
            if key in ("n_subintervals", "m_total"):
                other = "m_total" if key == "n_subintervals" else "n_subintervals"
                for value in values:
                    partition_axis.append(
                        {SWEEP_TARGETS[key]: value, SWEEP_TARGETS[other]: None}
                    )
                continue
            axes.append([{SWEEP_TARGETS[key]: value} for value in values])
        if partition_axis:
            axes.append(partition_axis)

        if not axes:
            point = copy.deepcopy(self)
            point.sweep = {}
            return [point]

        points = []
        for combo in itertools.product(*axes):
            point = copy.deepcopy(self)
            point.sweep = {}
            labels = []
            for overrides in combo:
                for (section, key), value in overrides.items():
                    if value is None:
                        point.section(section).pop(key, None)
                        continue
                    point.section(section)[key] = value
                    labels.append(f"{key}={value}")
            point.name = f"{self.name}[{','.join(labels)}]"
            points.append(point)
        return points

    def to_flat(self) -> Dict[str, Any]:
        """Flatten the configuration into ``section.key`` columns for a result row."""
        flat: Dict[str, Any] = {
            "experiment.name": self.name,
            "experiment.kind": self.kind,
            "experiment.method": self.method,
            "experiment.seed": self.seed,
        }
        if self.factory:
            flat["experiment.factory"] = self.factory
        for name in VALUE_SECTIONS:
            for key, value in sorted(self.section(name).items()):
                flat[f"{name}.{key}"] = value
        return flat

    @classmethod
    def from_flat(cls, flat: Dict[str, Any]) -> "ExperimentConfig":
        """
        Rebuild a configuration from the ``section.key`` columns of a result row.

        Args:
            flat: Mapping of flattened keys to values (strings or typed values)

        Returns:
            ExperimentConfig: Configuration that re-executes the row

        Raises:
            ConfigParseError: If a column does not match the experiment schema
        """
        names = ("experiment",) + VALUE_SECTIONS
        sections: Dict[str, Dict[str, Any]] = {name: {} for name in names}
        for column, value in flat.items():
            if "." not in column:
                continue
            section, key = column.split(".", 1)
            if section not in sections:
                continue
            if key not in SCHEMA[section]:
                raise ConfigParseError(f"Unknown column '{column}'")
            if value is None or (isinstance(value, float) and value != value):
                continue
            try:
                sections[section][key] = (
                    SCHEMA[section][key](value) if isinstance(value, str) else value
                )
            except ValueError as e:
                raise ConfigParseError(f"Invalid value for '{column}': {e}") from e
        experiment = sections["experiment"]
        return cls(
            name=str(experiment.get("name", "row")),
            kind=str(experiment.get("kind", "custom")),
            method=str(experiment.get("method", "sirm")),
            seed=int(experiment.get("seed", 0)),
            factory=experiment.get("factory"),
            model=sections["model"],
            sirm=sections["sirm"],
            local=sections["local"],
        )


def _line_index(text: str) -> Dict[Tuple[Optional[str], str], int]:
    """Map (section, key) pairs to their one-based line numbers."""
    index: Dict[Tuple[Optional[str], str], int] = {}
    section: Optional[str] = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[([^\]]+)\]", stripped)
        if header:
            section = header.group(1).strip()
            index[(None, section)] = number
            continue
        entry = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", stripped)
        if entry:
            index[(section, entry.group(1).strip().lower())] = number
    return index


def parse_experiment_text(text: str, path: Optional[str] = None) -> ExperimentConfig:
    """
    Parse the text of an experiment file.

    Args:
        text: INI document
        path: File path used in diagnostics

    Returns:
        ExperimentConfig: Parsed configuration (explicit values only, no defaults)

    Raises:
        ConfigParseError: On syntax errors, unknown sections/keys or malformed values
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=path or "<string>")
    except configparser.MissingSectionHeaderError as e:
        raise ConfigParseError("Entry outside of any section", path, e.lineno) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigParseError(f"Duplicate section '{e.section}'", path, e.lineno) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigParseError(f"Duplicate key '{e.option}'", path, e.lineno) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigParseError("Malformed line", path, line) from e

    lines = _line_index(text)
    values: Dict[str, Dict[str, Any]] = {}
    sweep: Dict[str, List[Any]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigParseError(
                f"Unknown section '[{section}]'", path, lines.get((None, section))
            )
        schema = SCHEMA[section]
        values[section] = {}
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in schema:
                raise ConfigParseError(f"Unknown key '{key}' in [{section}]", path, line)
            try:
                if section == "sweep":
                    items = [item.strip() for item in raw.split(",") if item.strip()]
                    sweep[key] = [schema[key](item) for item in items]
                else:
                    values[section][key] = schema[key](raw.strip())
            except ValueError as e:
                raise ConfigParseError(f"Invalid value for '{key}': {e}", path, line) from e

    experiment = values.get("experiment", {})
    for required in ("name", "kind"):
        if required not in experiment:
            raise ConfigParseError(
                f"Missing required key '{required}' in [experiment]",
                path,
                lines.get((None, "experiment")),
            )
    kind = experiment["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigParseError(
            f"Unknown experiment kind '{kind}'", path, lines.get(("experiment", "kind"))
        )
    method = experiment.get("method", "sirm" if kind != "scaling" else "local_sirm")
    if method not in METHODS:
        raise ConfigParseError(
            f"Unknown method '{method}'", path, lines.get(("experiment", "method"))
        )
    if kind == "custom" and not experiment.get("factory"):
        raise ConfigParseError(
            "Custom experiments need 'factory = module:function'",
            path,
            lines.get((None, "experiment")),
        )

    output = values.get("output", {})
    return ExperimentConfig(
        name=experiment["name"],
        kind=kind,
        method=method,
        seed=experiment.get("seed", 0),
        factory=experiment.get("factory"),
        model=values.get("model", {}),
        sirm=values.get("sirm", {}),
        local=values.get("local", {}),
        sweep=sweep,
        out_dir=output.get("out_dir", config.out_dir),
        write_fields=output.get("write_fields", True),
        write_spectra=output.get("write_spectra", True),
        source_path=path,
    )


def load_experiment_config(path: str) -> ExperimentConfig:
    """
    Load and parse an experiment file.

    Args:
        path: Path to the INI file

    Returns:
        ExperimentConfig: Parsed configuration

    Raises:
        ConfigParseError: If the file cannot be read or parsed
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"Cannot read experiment file: {e}", path) from e
    return parse_experiment_text(text, path)
