"""Command line: ``ricciwave run <experiment> ...`` and ``ricciwave list``."""
from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError, DivergenceError, ExperimentError
from .config import load_config
from .experiments import EXPERIMENTS, run_experiment
from .tables import emit, to_csv, to_json

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ricciwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment")
    run.add_argument("--config", help="INI file with one section per experiment")
    run.add_argument("--out", help="output path (stdout when omitted)")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    run.add_argument("--plot", action="store_true", help="also write a sibling .plot script")
    sub.add_parser("list", help="list the experiments")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        width = max(len(n) for n in EXPERIMENTS)
        for name, (desc, _) in EXPERIMENTS.items():
            print(f"{name:<{width}}  {desc}")
        return EXIT_OK

    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"out={args.out}")
    if args.format:
        overrides.append(f"format={args.format}")
    try:
        config = load_config(args.experiment, args.config, overrides)
        table = run_experiment(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.__cause__, (DivergenceError, ArithmeticError)):
            return EXIT_NUMERICAL
        return EXIT_USAGE

    if config.out:
        emit(table, config.format, config.out, plot=args.plot)
    else:
        sys.stdout.write(to_csv(table) if config.format == "csv" else to_json(table))
    if "diverged" in table.columns and any(table.column("diverged")):
        print("numerical failure: at least one sweep member diverged", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK
