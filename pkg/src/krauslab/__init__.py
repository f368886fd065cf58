"""
krauslab - Numerical laboratory for quantum measuring instruments.

Weak jump and diffusive instruments, their convolution semigroups and
trajectory ensembles, meter dilations, and the group-algebra identities
behind them, each checked against an exact oracle or a convergence order.

Example:
    >>> import krauslab
    >>>
    >>> # One suite, rows only
    >>> rows = krauslab.run_checks("iga", group="s3", seed=1)
    >>> all(row.passed for row in rows)
    True
    >>>
    >>> # Library level
    >>> from krauslab.operators import SIGMA_MINUS
    >>> inst = krauslab.jump_weak(SIGMA_MINUS, kappa=1.0, dt=1e-3)
    >>> krauslab.completeness_defect(inst) < 1e-5
    True

From the shell the same suites run as ``krauslab <suite> --seed 7 --out DIR``,
which writes ``manifest.json`` and ``results.csv`` to ``DIR``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from .config import SUBCOMMANDS, RunConfig, build_run_config
from .exceptions import (
    AtomCapError,
    CFLError,
    CombinatorialError,
    ConfigError,
    DimensionMismatchError,
    GridError,
    GroupTableError,
    InvalidInputError,
    KrausLabError,
    QuadratureError,
    RegimeWarning,
    RepresentationError,
    TruncationError,
    UnsupportedError,
)
from .instrument import (
    Atom,
    Instrument,
    WeakKind,
    WeakSpec,
    completeness_defect,
    convolve,
    diffusive_weak,
    jump_weak,
    repeat,
    total_operation,
)
from .records import CheckRow, RunManifest
from .superop import channel_exp, hs_adjoint, lindblad_dissipator, sandwich
from .trajectory import ensemble_channel, kraus_of_record, sample_record
from .writer import ResultWriter

__version__ = "0.1.0"
__all__ = [
    # Instruments
    "Atom",
    "Instrument",
    "WeakKind",
    "WeakSpec",
    "jump_weak",
    "diffusive_weak",
    "convolve",
    "repeat",
    "total_operation",
    "completeness_defect",
    # Superoperators
    "sandwich",
    "hs_adjoint",
    "lindblad_dissipator",
    "channel_exp",
    # Trajectories
    "sample_record",
    "kraus_of_record",
    "ensemble_channel",
    # Suites
    "SUBCOMMANDS",
    "RunConfig",
    "CheckRow",
    "RunManifest",
    "ResultWriter",
    "run_checks",
    # Exceptions
    "KrausLabError",
    "InvalidInputError",
    "DimensionMismatchError",
    "AtomCapError",
    "CombinatorialError",
    "QuadratureError",
    "TruncationError",
    "GridError",
    "CFLError",
    "UnsupportedError",
    "GroupTableError",
    "RepresentationError",
    "ConfigError",
    "RegimeWarning",
]


def run_checks(
    subcommand: str,
    out: str | Path | None = None,
    seed: int = 0,
    threads: int = 1,
    **params: Any,
) -> list[CheckRow]:
    """
    Run one suite and return its rows.

    This is a convenience function for scripts and notebooks. The command line
    adds config files and printing on top of the same path.

    Args:
        subcommand: Suite name, one of ``SUBCOMMANDS``.
        out: Result directory; nothing is written when omitted.
        seed: Root seed.
        threads: Worker threads for trajectory ensembles.
        **params: Suite parameters, as strings or already parsed values.

    Returns:
        The check rows in suite order.

    Raises:
        ConfigError: For an unknown suite or parameter.

    Example:
        >>> rows = krauslab.run_checks("commutative", ell=0.7, kappaT=1)
        >>> [row.check for row in rows][:2]
        ['characteristic_eigenvalue', 'normalized_total']
    """
    from .experiments import run_suite

    config = build_run_config(subcommand, seed=seed, out=out, threads=threads, overrides=params)
    rows = run_suite(config)
    if out is not None:
        manifest = RunManifest(config.subcommand, config.seed, config.threads, config.params)
        with ResultWriter(config.out, manifest) as writer:
            writer.extend(rows)
    return rows
