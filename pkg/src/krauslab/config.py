"""
Run configuration: INI files with a ``[run]`` section plus one section per suite.

Example file::

    [run]
    subcommand = unravel
    seed = 7
    out = results/unravel

    [unravel]
    preset = qubit-decay
    kappaT = 1
    dt = 1e-3
    N = 10000

Command-line flags override file values; every value is parsed by the
subcommand's schema, so errors name the offending key.
"""

from __future__ import annotations

import configparser
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .exceptions import ConfigError, KrausLabError
from .finite_groups import BUILTIN_GROUPS
from .utils import parse_lindblads, parse_scalar, parse_scalar_list

RUN_SECTION = "run"
DEFAULT_SEED = 0
DEFAULT_OUT = "krauslab-results"
MAX_SEED = 2**64 - 1


def parse_count(value: str) -> int:
    """Positive integer; accepts ``1e4``."""
    number = parse_scalar(value)
    if number != int(number) or number < 1:
        raise ValueError(f"expected a positive integer, got '{value}'")
    return int(number)


def parse_odd_count(value: str) -> int:
    count = parse_count(value)
    if count % 2 == 0:
        raise ValueError(f"expected an odd count, got {count}")
    return count


def parse_positive(value: str) -> float:
    number = parse_scalar(value)
    if not number > 0:
        raise ValueError(f"expected a positive number, got '{value}'")
    return number


def parse_positive_list(value: str) -> list[float]:
    numbers = parse_scalar_list(value)
    if any(not v > 0 for v in numbers):
        raise ValueError(f"expected positive numbers, got '{value}'")
    return numbers


def parse_preset(value: str) -> str:
    """Lindblad preset or ``;``-separated matrix literals, validated and kept as text."""
    parse_lindblads(value)
    return value.strip()


def parse_kind(value: str) -> str:
    kind = value.strip().lower()
    if kind not in ("diffusive", "jump"):
        raise ValueError(f"expected 'diffusive' or 'jump', got '{value}'")
    return kind


def parse_switch(value: str | bool) -> bool:
    if isinstance(value, bool):
        return value
    flag = value.strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return True
    if flag in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected yes or no, got '{value}'")


def parse_group(value: str) -> str:
    name = value.strip().lower()
    if name != "all" and name not in BUILTIN_GROUPS:
        raise ValueError(f"expected one of {', '.join(sorted(BUILTIN_GROUPS))} or 'all'")
    return name


def parse_seed(value: str | int) -> int:
    seed = int(value)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must lie in [0, 2^64), got {seed}")
    return seed


@dataclass(frozen=True)
class ParamSpec:
    """One suite parameter: its key, parser and default."""

    name: str
    parser: Callable[[str], Any]
    default: Any
    help: str = ""

    def parse(self, raw: Any) -> Any:
        try:
            return self.parser(raw)
        except (KrausLabError, ValueError, TypeError) as e:
            raise ConfigError(self.name, str(e)) from e


DEFAULT_DTS = "1e-2,1e-3,1e-4"

SCHEMAS: dict[str, tuple[ParamSpec, ...]] = {
    "unravel": (
        ParamSpec("preset", parse_preset, "qubit-decay", "Lindblad preset or matrix literals"),
        ParamSpec("kind", parse_kind, "diffusive", "unraveling: diffusive or jump"),
        ParamSpec("kappa", parse_positive, 1.0, "measurement rate"),
        ParamSpec("kappaT", parse_positive, 1.0, "total duration in units of 1/kappa"),
        ParamSpec("dt", parse_positive, 1e-3, "time step"),
        ParamSpec("N", parse_count, 10_000, "number of trajectories"),
        ParamSpec("checkpoints", parse_count, 4, "number of checkpoint times"),
        ParamSpec("antithetic", parse_switch, False, "pair Wiener records with their negations"),
    ),
    "semigroup": (
        ParamSpec("preset", parse_preset, "qubit-decay", "Lindblad preset or matrix literals"),
        ParamSpec("kind", parse_kind, "diffusive", "weak instrument: diffusive or jump"),
        ParamSpec("kappa", parse_positive, 1.0, "measurement rate"),
        ParamSpec("dts", parse_positive_list, DEFAULT_DTS, "time steps for the order fit"),
        ParamSpec("nodes", parse_count, 21, "Gauss-Hermite nodes per channel"),
        ParamSpec("pairs", parse_count, 50, "random instrument pairs"),
        ParamSpec("repeats", parse_count, 6, "largest repeat count"),
    ),
    "dilate": (
        ParamSpec("cutoff", parse_count, 40, "meter Fock cutoff"),
        ParamSpec("kappa", parse_positive, 1.0, "measurement rate"),
        ParamSpec("dts", parse_positive_list, DEFAULT_DTS, "time steps for the order fits"),
        ParamSpec("dt", parse_positive, 1e-3, "time step for single-step checks"),
        ParamSpec("phi", parse_scalar, 1.5707963267948966, "local-oscillator phase"),
    ),
    "intertwine": (
        ParamSpec("preset", parse_preset, "qubit-xy", "Lindblad preset or matrix literals"),
        ParamSpec("samples", parse_count, 5, "random group elements"),
        ParamSpec("hs", parse_positive_list, "1e-2,5e-3,2.5e-3", "finite-difference steps"),
    ),
    "commutative": (
        ParamSpec("ell", parse_scalar, 0.7, "label of the one-dimensional representation"),
        ParamSpec("kappa", parse_positive, 1.0, "measurement rate"),
        ParamSpec("kappaT", parse_positive, 1.0, "total duration in units of 1/kappa"),
        ParamSpec("dt", parse_positive, 1e-3, "time step of the Markov operator"),
        ParamSpec("fpk_kappaT", parse_positive, 0.5, "duration of the grid solve"),
        ParamSpec("x_width", parse_positive, 0.25, "mollifier width of the grid start"),
    ),
    "iga": (
        ParamSpec("group", parse_group, "s3", "built-in group or 'all'"),
        ParamSpec("table", str, "", "plain-text multiplication table (overrides group)"),
    ),
    "haar": (
        ParamSpec("a", parse_positive, 2.0, "dilation of the test translation"),
        ParamSpec("b", parse_scalar, 1.0, "shift of the test translation"),
        ParamSpec("pairs", parse_count, 20, "random pairs for the modular function"),
    ),
    "weakcomm": (
        ParamSpec("preset", parse_preset, "qubit-xy", "two Lindblad operators"),
        ParamSpec("kappa", parse_positive, 1.0, "measurement rate"),
        ParamSpec("dts", parse_positive_list, DEFAULT_DTS, "time steps for the order fit"),
        ParamSpec("dt", parse_positive, 1e-3, "time step of the ensemble"),
        ParamSpec("N", parse_count, 10_000, "number of samples"),
    ),
    "kod": (
        ParamSpec("kappa", parse_positive, 1.0, "measurement rate"),
        ParamSpec("kappaT", parse_positive, 1.0, "total duration in units of 1/kappa"),
        ParamSpec("dt", parse_positive, 1e-3, "time step"),
        ParamSpec("N", parse_count, 100_000, "number of records"),
        ParamSpec("bins", parse_odd_count, 101, "histogram bins (odd)"),
    ),
}

SUBCOMMANDS = tuple(SCHEMAS)


@dataclass
class RunConfig:
    """
    Fully resolved inputs of one run.

    Attributes:
        subcommand: Suite to run.
        seed: Root seed; every random draw descends from it.
        out: Result directory.
        threads: Worker threads for trajectory ensembles.
        params: Parsed suite parameters, every schema key present.
    """

    subcommand: str
    seed: int = DEFAULT_SEED
    out: Path = field(default_factory=lambda: Path(DEFAULT_OUT))
    threads: int = 1
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.subcommand not in SCHEMAS:
            raise ConfigError(
                "subcommand", f"unknown subcommand '{self.subcommand}' ({', '.join(SUBCOMMANDS)})"
            )
        if self.threads < 1:
            raise ConfigError("threads", f"must be >= 1, got {self.threads}")


def read_config_file(path: str | Path) -> tuple[dict[str, str], dict[str, dict[str, str]]]:
    """
    Read an INI file into its ``[run]`` section and the per-suite sections.

    Raises:
        ConfigError: If the file cannot be read or parsed, or names an unknown section.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError("config", f"cannot read '{path}': {e}") from e
    except configparser.Error as e:
        raise ConfigError("config", f"cannot parse '{path}': {e}") from e

    run: dict[str, str] = {}
    sections: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        values = dict(parser.items(name))
        if name == RUN_SECTION:
            run = values
        elif name in SCHEMAS:
            sections[name] = values
        else:
            raise ConfigError(name, "unknown section")
    return run, sections


def resolve_params(
    subcommand: str,
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """
    Merge schema defaults, file values and overrides (in that order) and parse them.

    Raises:
        ConfigError: For unknown keys or unparsable values.
    """
    schema = {spec.name: spec for spec in SCHEMAS[subcommand]}
    merged: dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in schema:
                raise ConfigError(key, f"not a parameter of '{subcommand}'")
            merged[key] = value
    return {
        name: spec.parse(merged.get(name, spec.default)) for name, spec in schema.items()
    }


_RUN_KEYS = ("subcommand", "seed", "out", "threads")


def build_run_config(
    subcommand: str | None,
    config_path: str | Path | None = None,
    seed: int | None = None,
    out: str | Path | None = None,
    threads: int | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """
    Resolve a run from an optional config file and command-line values.

    Raises:
        ConfigError: If any key is unknown or invalid, or the file and the
            command line name different subcommands.
    """
    run: dict[str, str] = {}
    sections: dict[str, dict[str, str]] = {}
    if config_path is not None:
        run, sections = read_config_file(config_path)
    for key in run:
        if key not in _RUN_KEYS:
            raise ConfigError(key, f"not a key of the [{RUN_SECTION}] section")

    file_subcommand = run.get("subcommand")
    if subcommand and file_subcommand and file_subcommand != subcommand:
        raise ConfigError(
            "subcommand", f"config file runs '{file_subcommand}', command line '{subcommand}'"
        )
    name = subcommand or file_subcommand
    if not name:
        raise ConfigError("subcommand", "no subcommand given")
    if name not in SCHEMAS:
        raise ConfigError("subcommand", f"unknown subcommand '{name}'")
    for other in sections:
        if other != name:
            raise ConfigError(other, f"section does not belong to subcommand '{name}'")

    try:
        resolved_seed = parse_seed(seed if seed is not None else run.get("seed", DEFAULT_SEED))
    except ValueError as e:
        raise ConfigError("seed", str(e)) from e
    try:
        resolved_threads = int(threads if threads is not None else run.get("threads", 1))
    except ValueError as e:
        raise ConfigError("threads", str(e)) from e
    resolved_out = Path(out if out is not None else run.get("out", Path(DEFAULT_OUT) / name))

    return RunConfig(
        subcommand=name,
        seed=resolved_seed,
        out=resolved_out,
        threads=resolved_threads,
        params=resolve_params(name, sections.get(name), overrides),
    )
