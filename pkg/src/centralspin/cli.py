"""Command-line entry point: ``centralspin <subcommand> [--config FILE] [--key value ...]``.

Every subcommand writes a CSV table (header row, shortest round-trip float
text, ``\\n`` line endings) to stdout or ``--out``. Exit codes: 0 success,
1 invalid input, 2 oracle-check tolerance failure.
"""
from __future__ import annotations

import argparse
import io
import logging
import os
import sys

import numpy as np

from .core import CapacityError, ValidationError
from .experiments import SCHEMAS, ExperimentConfig, parse_config_text, parse_value, run_experiment

THREADS_ENV = "CENTRALSPIN_THREADS"

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Argument errors are input-validation failures (exit 1), not exit 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="centralspin", description="Driven central-spin decoherence experiments.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("-v", "--verbose", action="store_true", help="log which evaluation paths ran")
        p.add_argument("--config", help="flat key=value file ('#' comments)")
        p.add_argument("--out", help="write CSV here instead of stdout")
        p.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or all cores)")
        for key in schema:
            p.add_argument(f"--{key}", dest=f"key_{key}", metavar="VALUE")
    return parser


def format_csv(header, table) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in np.atleast_2d(table):
        buf.write(",".join(repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


def _threads(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(THREADS_ENV, f"not an integer: {env!r}") from None
    return os.cpu_count() or 1


def resolve_config(args) -> ExperimentConfig:
    params = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                params.update(parse_config_text(args.subcommand, fh.read()))
        except OSError as exc:
            raise ValidationError("config", str(exc)) from None
    for key in SCHEMAS[args.subcommand]:
        value = getattr(args, f"key_{key}")
        if value is not None:
            params[key] = parse_value(args.subcommand, key, value)
    return ExperimentConfig(args.subcommand, params, args.out, _threads(args.threads))


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        header, table = run_experiment(cfg)
    except (ValidationError, CapacityError) as exc:
        print(f"centralspin {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if cfg.subcommand == "oracle-check":
        names = header
        failed = [n for n, (_, dev, tol) in zip(names, table) if not dev <= tol]
        lines = ["check,max_trace_distance,tolerance,status"]
        lines += [f"{n},{dev!r},{tol!r},{'FAIL' if n in failed else 'ok'}"
                  for n, (_, dev, tol) in zip(names, table.tolist())]
        _emit("\n".join(lines) + "\n", cfg.out)
        return EXIT_TOLERANCE if failed else EXIT_OK
    _emit(format_csv(header, table), cfg.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
