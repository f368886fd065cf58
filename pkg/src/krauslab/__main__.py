"""Command-line interface for krauslab."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .config import SCHEMAS, RunConfig, build_run_config
from .exceptions import KrausLabError
from .experiments import run_suite
from .records import RunManifest
from .writer import ResultWriter

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2

SUITE_HELP = {
    "unravel": "Trajectory ensemble against the Lindblad channel",
    "semigroup": "Weak instruments, convolution group property and superoperator calculus",
    "dilate": "Meter dilation residuals and convergence orders",
    "intertwine": "Intertwining relations of the instrumental group",
    "commutative": "One-dimensional commutative analog",
    "iga": "Group-algebra identities on finite groups",
    "haar": "Haar measures, modular function and delta identities on the affine group",
    "weakcomm": "Weak commutativity of diffusive Kraus operators",
    "kod": "Abelian Kraus-operator density from sampled records",
}


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Run options, accepted before and after the subcommand."""

    def default(value: object) -> object:
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--config", default=default(None), help="INI run configuration file")
    parser.add_argument("--seed", type=int, default=default(None), help="Root seed (default: 0)")
    parser.add_argument("--out", default=default(None), help="Result directory")
    parser.add_argument(
        "--threads", type=int, default=default(None), help="Worker threads (default: 1)"
    )
    parser.add_argument(
        "-v", "--verbose",
        action="count",
        default=default(0),
        help="Log progress (-v) or debug detail (-vv) to stderr",
    )


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_run(config: RunConfig) -> int:
    """Run one suite, print its rows and write the result directory."""
    print(f"krauslab {config.subcommand}: seed {config.seed}, {config.threads} thread(s)")
    rows = run_suite(config)
    manifest = RunManifest(config.subcommand, config.seed, config.threads, config.params)
    with ResultWriter(config.out, manifest) as writer:
        writer.extend(rows)
    for row in rows:
        print(f"  {row.describe()}")

    print()
    failed = writer.failed
    print(f"{len(rows)} check(s), {len(failed)} failed; results in {config.out}")
    if failed:
        for row in failed:
            print(f"Failed: {row.describe()}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Main entry point for CLI."""
    parser = argparse.ArgumentParser(
        prog="krauslab",
        description="Numerical checks of quantum measuring instruments.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )
    _add_common(parser, suppress=False)

    subparsers = parser.add_subparsers(dest="command", help="Available suites")
    for name, schema in SCHEMAS.items():
        sub = subparsers.add_parser(name, help=SUITE_HELP[name], description=SUITE_HELP[name])
        _add_common(sub, suppress=True)
        for spec in schema:
            sub.add_argument(
                f"--{spec.name}",
                dest=spec.name,
                default=None,
                metavar=spec.name.upper(),
                help=f"{spec.help} (default: {spec.default})",
            )

    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    if args.command is None and args.config is None:
        parser.print_help()
        return EXIT_OK

    overrides = {}
    if args.command is not None:
        overrides = {spec.name: getattr(args, spec.name) for spec in SCHEMAS[args.command]}

    try:
        config = build_run_config(
            args.command,
            config_path=args.config,
            seed=args.seed,
            out=args.out,
            threads=args.threads,
            overrides=overrides,
        )
        return cmd_run(config)
    except KrausLabError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
