"""Command line entry point: ``solve``, ``check`` and ``reproduce``.

Exit codes: 0 when everything passes, 1 when a row, bound or hypothesis
check fails, 2 for usage, parse and unknown-name errors.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from .config import load_config
from .errors import ConditionViolatedError, ConfigParseError, StochFredError, UnknownExampleError
from .examples import EXAMPLES, reproduce_example
from .runner import check_problem, run_problem

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochfred",
                                     description="Parameterised second-kind Fredholm solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a config over its parameter sweep")
    p.add_argument("config")
    p.add_argument("--out", help="write the per-sample CSV here")
    p.add_argument("--force", action="store_true", help="solve even if the hypotheses fail")
    p.add_argument("--seed", type=_u64, help="override the sweep seed")

    p = sub.add_parser("check", help="evaluate the hypotheses only")
    p.add_argument("config")

    p = sub.add_parser("reproduce", help="run a known-answer example")
    p.add_argument("name", help=", ".join(EXAMPLES))
    return parser


def _solve(args) -> int:
    cfg = load_config(args.config).with_overrides(force=args.force or None, seed=args.seed)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = run_problem(cfg)
    except ConditionViolatedError as exc:
        if exc.diagnostic is not None:
            print(exc.diagnostic.summary())
        print(f"error: {exc} (use --force to solve anyway)", file=sys.stderr)
        return EXIT_FAIL
    for w in {str(w.message) for w in caught}:
        print(f"warning: {w}", file=sys.stderr)
    print(report.table())
    if cfg.solver.force and not report.condition.passes:
        print("note: hypotheses fail, the error bound is not guaranteed and was not evaluated")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
    return EXIT_OK if report.all_pass and report.condition.passes else EXIT_FAIL


def _check(args) -> int:
    diag = check_problem(load_config(args.config))
    print(diag.summary())
    return EXIT_OK if diag.passes else EXIT_FAIL


def _reproduce(args) -> int:
    result = reproduce_example(args.name)
    print(result.table())
    return EXIT_OK if result.passed else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": _solve, "check": _check, "reproduce": _reproduce}[args.command]
    try:
        return handler(args)
    except (ConfigParseError, UnknownExampleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StochFredError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
