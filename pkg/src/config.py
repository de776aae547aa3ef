"""Run configuration: a flat TOML file, overridable key by key from flags.

Every key of the schema below has a command-line flag of the same name
(dashes for underscores). Flags win over the file. Unknown keys are rejected.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from src.circuit import DEFAULT_MAX_QUBITS, QubitRoles
from src.errors import ConfigError
from src.search import SearchConfig

logger = logging.getLogger(__name__)


# key -> (accepted types, description); order is the template order
CONFIG_SCHEMA: dict[str, tuple[tuple[type, ...], str]] = {
    "circuit": ((str,), "OpenQASM 2.0 file of the program under test"),
    "spec": ((str,), "program specification (.spec.json)"),
    "input_qubits": ((list,), 'input qubits, first is the least significant bit; indices or "reg[k]"'),
    "output_qubits": ((list,), "output qubits, same conventions as input_qubits"),
    "num_qubits": ((int,), "optional check against the circuit's qubit count"),
    "suite_size": ((int,), "absolute number of tests M (excludes suite_fraction)"),
    "suite_fraction": ((float, int), "M = ceil(suite_fraction * 2^|inputs|), default 0.05"),
    "population_size": ((int,), "GA population size"),
    "max_generations": ((int,), "generations, counting the initial population"),
    "crossover_rate": ((float, int), "probability of applying SBX to a parent pair"),
    "crossover_distribution_index": ((float, int), "SBX distribution index"),
    "mutation_rate": ((float, int), "per-gene mutation probability, default 1/M"),
    "mutation_distribution_index": ((float, int), "polynomial mutation distribution index"),
    "alpha": ((float, int), "significance level of the chi-square test"),
    "seed": ((int,), "master seed; identical seeds give identical suites"),
    "elitism": ((int,), "best individuals carried over unchanged"),
    "output_dir": ((str,), "directory for suite.json and suite.report.txt"),
    "strict_domain": ((bool,), "require the spec to list every input"),
    "workers": ((int,), "threads executing the tests of one individual"),
    "max_qubits": ((int,), "simulation cap on the number of qubits"),
}

REQUIRED_KEYS = ("circuit", "spec", "input_qubits", "output_qubits")
PATH_KEYS = ("circuit", "spec", "output_dir")

_SEARCH_KEYS = {f.name for f in fields(SearchConfig)}


@dataclass(frozen=True)
class RunConfig:
    """Everything one `generate` run needs."""

    circuit_path: Path
    spec_path: Path
    roles: QubitRoles
    search: SearchConfig
    output_dir: Path = Path(".")
    num_qubits: int | None = None
    strict_domain: bool = False
    max_qubits: int = DEFAULT_MAX_QUBITS

    def to_dict(self) -> dict[str, Any]:
        """Flat echo of the configuration, in schema key order, with absolute paths."""
        echo: dict[str, Any] = {
            "circuit": str(self.circuit_path.resolve()),
            "spec": str(self.spec_path.resolve()),
            "input_qubits": list(self.roles.input_qubits),
            "output_qubits": list(self.roles.output_qubits),
            "num_qubits": self.num_qubits,
            **self.search.to_dict(),
            "output_dir": str(self.output_dir.resolve()),
            "strict_domain": self.strict_domain,
            "max_qubits": self.max_qubits,
        }
        return {key: echo[key] for key in CONFIG_SCHEMA}


def _check_value(key: str, value: Any) -> Any:
    if key not in CONFIG_SCHEMA:
        raise ConfigError(f"unknown configuration key '{key}'", key=key)
    types, _ = CONFIG_SCHEMA[key]
    # bool is an int subclass; only strict_domain takes booleans
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"'{key}' must be {_type_names(types)}, got a boolean", key=key)
    if not isinstance(value, types):
        raise ConfigError(
            f"'{key}' must be {_type_names(types)}, got {type(value).__name__}", key=key
        )
    if key in ("input_qubits", "output_qubits"):
        for entry in value:
            if isinstance(entry, bool) or not isinstance(entry, (int, str)):
                raise ConfigError(
                    f"'{key}' entries must be qubit indices or \"reg[k]\" strings, got {entry!r}",
                    key=key,
                )
    if isinstance(value, int) and float in types:
        return float(value)
    return value


def _type_names(types: tuple[type, ...]) -> str:
    names = {str: "a string", list: "a list", int: "an integer", float: "a number", bool: "true or false"}
    return names[types[0]]


def load_config_file(path: Path) -> dict[str, Any]:
    """Read a TOML run configuration; paths become relative to its directory."""
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", hint="Check the --config path") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: invalid TOML: {e}") from e
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e

    values: dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            raise ConfigError(f"{path}: tables are not part of the schema ([{key}])", key=key)
        try:
            values[key] = _check_value(key, value)
        except ConfigError as e:
            raise ConfigError(f"{path}: {e.message}", key=e.key, hint=e.hint) from e

    base = path.parent
    for key in PATH_KEYS:
        if key in values and not Path(values[key]).is_absolute():
            values[key] = str(base / values[key])
    logger.debug("Loaded %d keys from %s", len(values), path)
    return values


def build_run_config(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Merge file values with flag overrides (None means "not given")."""
    merged: dict[str, Any] = dict(file_values or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = _check_value(key, value)

    for key in REQUIRED_KEYS:
        if key not in merged:
            raise ConfigError(
                f"missing required key '{key}'",
                key=key,
                hint=f"Set {key} in the config file or pass --{key.replace('_', '-')}",
            )
    if not merged["input_qubits"]:
        raise ConfigError("input_qubits must not be empty", key="input_qubits")
    if not merged["output_qubits"]:
        raise ConfigError("output_qubits must not be empty", key="output_qubits")
    # A flag for one suite-size mode replaces the other mode set in the file
    if overrides and overrides.get("suite_size") is not None:
        merged.pop("suite_fraction", None)
    elif overrides and overrides.get("suite_fraction") is not None:
        merged.pop("suite_size", None)

    for key in ("num_qubits", "max_qubits"):
        if key in merged and merged[key] < 1:
            raise ConfigError(f"'{key}' must be >= 1, got {merged[key]}", key=key)

    search = SearchConfig(**{k: v for k, v in merged.items() if k in _SEARCH_KEYS})
    return RunConfig(
        circuit_path=Path(merged["circuit"]),
        spec_path=Path(merged["spec"]),
        roles=QubitRoles.of(merged["input_qubits"], merged["output_qubits"]),
        search=search,
        output_dir=Path(merged.get("output_dir", ".")),
        num_qubits=merged.get("num_qubits"),
        strict_domain=merged.get("strict_domain", False),
        max_qubits=merged.get("max_qubits", DEFAULT_MAX_QUBITS),
    )


def default_template() -> str:
    """Commented TOML template with every key at its default."""
    defaults = SearchConfig()
    lines = [
        "# Run configuration for `python -m src.cli generate --config <this file>`.",
        "# Paths are relative to this file. Every key can be overridden by a flag.",
        "",
        'circuit = "program.qasm"',
        'spec = "program.spec.json"',
        "input_qubits = [0, 1]",
        "output_qubits = [2]",
        "# num_qubits = 3",
        "",
        "# suite_size = 4",
        "suite_fraction = 0.05",
        f"population_size = {defaults.population_size}",
        f"max_generations = {defaults.max_generations}",
        f"crossover_rate = {defaults.crossover_rate}",
        f"crossover_distribution_index = {defaults.crossover_distribution_index}",
        "# mutation_rate = 0.25",
        f"mutation_distribution_index = {defaults.mutation_distribution_index}",
        f"alpha = {defaults.alpha}",
        f"seed = {defaults.seed}",
        f"elitism = {defaults.elitism}",
        "",
        'output_dir = "."',
        "strict_domain = false",
        f"workers = {defaults.workers}",
        f"max_qubits = {DEFAULT_MAX_QUBITS}",
        "",
        "# Keys:",
    ]
    width = max(len(key) for key in CONFIG_SCHEMA)
    for key, (_, description) in CONFIG_SCHEMA.items():
        lines.append(f"#   {key:<{width}}  {description}")
    return "\n".join(lines) + "\n"
