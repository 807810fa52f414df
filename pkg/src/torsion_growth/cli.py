"""Command line entry point: ``run`` and ``validate`` subcommands."""

from __future__ import annotations

import argparse
import logging
import sys

from .counterexample import BudgetExceeded
from .experiment import ExperimentConfig, PipelineDisagreement, run, validate
from .homology import CompositionError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DISAGREEMENT = 3
EXIT_BUDGET = 4


def _load(path: str):
    try:
        return ExperimentConfig.load(path), None
    except (OSError, ValueError, TypeError) as exc:
        return None, f"cannot load config {path}: {exc}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torsion-growth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute the configured pipelines")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p_run.add_argument("--out", default=".")
    p_val = sub.add_parser("validate", help="list config diagnostics")
    p_val.add_argument("--config", required=True)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    sys.set_int_max_str_digits(0)
    config, err = _load(args.config)
    if err:
        print(err, file=sys.stderr)
        return EXIT_INVALID
    diags = validate(config)
    if args.command == "validate":
        for d in diags:
            print(d)
        return EXIT_INVALID if diags else EXIT_OK
    if diags:
        for d in diags:
            print(f"invalid config: {d}", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        config.seed = args.seed
    try:
        run(config, args.out, max(1, args.jobs))
    except (PipelineDisagreement, CompositionError) as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return EXIT_DISAGREEMENT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
