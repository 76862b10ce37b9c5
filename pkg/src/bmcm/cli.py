"""Command-line entry point.

Exit codes: 0 success, 1 null-data gate failed (report still written),
2 input or usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .data import generate_dependent, generate_random, read_csv, write_csv
from .errors import BMCMError
from .expr import enumerate_models, parse_template, render_template
from .pipeline import RunConfig, run_full

EXIT_OK = 0
EXIT_GATE = 1
EXIT_INPUT = 2

_GENERATORS = {"random": generate_random, "dependent": generate_dependent}


def _fail(msg: str) -> int:
    print(f"bmcm: error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        dataset = _GENERATORS[args.kind](args.n, args.seed)
    except BMCMError as exc:
        return _fail(str(exc))
    try:
        if args.out is None or args.out == "-":
            write_csv(dataset, sys.stdout)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                write_csv(dataset, fh)
    except OSError as exc:
        return _fail(f"cannot write {args.out}: {exc}")
    return EXIT_OK


def cmd_models(args: argparse.Namespace) -> int:
    try:
        models = enumerate_models(args.variables, args.target)
    except BMCMError as exc:
        return _fail(str(exc))
    for m in models:
        print(render_template(m))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        dataset = read_csv(args.data, args.outcome)
    except OSError as exc:
        return _fail(f"cannot read {args.data}: {exc}")
    except BMCMError as exc:
        return _fail(str(exc))

    if bool(args.model) == bool(args.enumerate):
        return _fail("give either --model (repeatable) or --enumerate")
    try:
        if args.enumerate:
            templates = enumerate_models(dataset.explanatory, dataset.outcome)
        else:
            templates = [parse_template(text) for text in args.model]
        config = RunConfig(
            mode=args.mode,
            trials_per_row=args.trials,
            seed=args.seed,
            alpha=args.alpha,
            include_null_in_step2=args.include_null_step2,
            ignore_gate=args.ignore_gate,
            workers=args.workers,
        )
        report = run_full(dataset, templates, config)
    except (BMCMError, ValueError) as exc:
        return _fail(str(exc))

    text = report.to_json() if args.format == "json" else report.to_text()
    try:
        _write(text, args.out)
    except OSError as exc:
        return _fail(f"cannot write {args.out}: {exc}")
    if not report.gate_passed:
        print("bmcm: null-data gate failed; change the variables or hypothesis", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmcm", description="Operator tendencies for multivariate binary data."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic cohort as CSV")
    gen.add_argument("kind", choices=sorted(_GENERATORS))
    gen.add_argument("--n", type=int, default=1000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="output path (default: stdout)")
    gen.set_defaults(func=cmd_generate)

    mod = sub.add_parser("models", help="list the six three-variable model templates")
    mod.add_argument("variables", nargs="+")
    mod.add_argument("--target", default="xO")
    mod.set_defaults(func=cmd_models)

    ana = sub.add_parser("analyze", help="run the three-step analysis on a CSV file")
    ana.add_argument("data", help="CSV file with a header row and 0/1 cells")
    ana.add_argument("--outcome", required=True)
    ana.add_argument("--model", action="append", default=[], help="template, e.g. 'x1 ? x2 ? x3 = xO'")
    ana.add_argument("--enumerate", action="store_true", help="analyze the six standard 3-variable models")
    ana.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    ana.add_argument("--trials", type=int, default=1024, help="trials per row in sampled mode")
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--alpha", type=float, default=0.05)
    ana.add_argument("--include-null-step2", action="store_true")
    ana.add_argument("--ignore-gate", action="store_true", help="continue past a failed null-data gate")
    ana.add_argument("--workers", type=int, default=1)
    ana.add_argument("--format", choices=("json", "text"), default="json")
    ana.add_argument("--out", help="report path (default: stdout)")
    ana.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
