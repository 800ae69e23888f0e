"""Command-line front end: ``lambdasym verify|trace|report <file>``.

Exit status is 0 when every check passes, 1 when one fails and 2 on
input errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import problem as pb
from .numtrace import NonFiniteStateError

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    try:
        if not sep or not name:
            raise ValueError
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lambdasym", description="Verify lambda-symmetry computations declared in problem files.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("file", help="problem file, or the name of a bundled fixture")
        p.add_argument("--seed", type=int, help="sampling seed")
        p.add_argument("--samples", type=int, help="number of random samples per identity")
        p.add_argument("--tol", type=float, help="relative and absolute tolerance")
        p.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE",
                       help="override a declared parameter (repeatable)")

    common(sub.add_parser("verify", help="run every check and print a text report"))
    rp = sub.add_parser("report", help="run every check and print the report in a chosen format")
    common(rp)
    rp.add_argument("--format", choices=("text", "json"), default="text")

    tp = sub.add_parser("trace", help="integrate with RK4 and check the declared deviation laws")
    tp.add_argument("file")
    tp.add_argument("--t0", type=float)
    tp.add_argument("--h", type=float)
    tp.add_argument("--steps", type=int)
    tp.add_argument("--x0", type=_floats, help="initial state v1,v2,...")
    tp.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE")
    tp.add_argument("--out", help="write the trajectory table here instead of stdout")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        if args.command == "trace":
            return _trace(args)
        prob = pb.load(args.file, args.seed, args.samples, args.tol, dict(args.param))
        report = pb.verify(prob)
    except pb.ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "report" and args.format == "json":
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(report.to_text())
    return EXIT_PASS if report.passed else EXIT_FAIL


def _trace(args) -> int:
    prob = pb.load(args.file, params=dict(args.param))
    try:
        traj, report = pb.trace(prob, args.t0, args.h, args.steps, args.x0)
    except NonFiniteStateError as exc:
        print(f"{prob.name}: integration aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            traj.write(fh)
    else:
        traj.write(sys.stdout)
    sys.stderr.write(report.to_text())
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
