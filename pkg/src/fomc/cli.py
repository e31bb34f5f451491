"""Command-line interface.

Subcommands cover the full pipeline: ``count`` compiles (with base
cases) and evaluates, ``compile`` prints the resulting equations,
``emit`` writes the generated C++ source, and ``oracle`` brute-forces
the count for cross-checking.  Only the count goes to stdout; all
diagnostics go to stderr.

Exit codes: 0 success, 1 compilation failure, 2 usage error, 3 oracle
limit exceeded, 4 timeout.
"""

from __future__ import annotations

import argparse
import signal
import sys
from pathlib import Path

from fomc.algebra import format_program
from fomc.basecases import BaseCaseError, compile_with_base_cases
from fomc.codegen import EmissionError, emit_program
from fomc.compiler import CompilationFailure
from fomc.evaluator import EvaluationError, evaluate
from fomc.frontend import ParseError, parse_instance
from fomc.logic import WfomcInstance, validate
from fomc.oracle import OracleLimitError, brute_force_wfomc
from fomc.preprocess import (
    UnsupportedFormulaError,
    drop_redundant,
    skolemize,
    to_clausal,
)

EXIT_OK = 0
EXIT_COMPILATION = 1
EXIT_USAGE = 2
EXIT_ORACLE_LIMIT = 3
EXIT_TIMEOUT = 4


class _Timeout(Exception):
    pass


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fomc", description="exact first-order model counting"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", help="instance file")
        p.add_argument(
            "--size",
            action="append",
            default=[],
            metavar="DOMAIN=N",
            help="domain size (repeatable; overrides sizes in the file)",
        )
        p.add_argument("--mode", choices=["greedy", "bfs"], default="bfs")
        p.add_argument("--timeout", type=float, default=None, metavar="SECONDS")
        p.add_argument("--trace", action="store_true", help="log rule applications")

    p_count = sub.add_parser("count", help="compile, evaluate, print the count")
    common(p_count)
    p_compile = sub.add_parser("compile", help="print the compiled equations")
    common(p_compile)
    p_compile.add_argument(
        "--print-equations",
        action="store_true",
        help="also print each function's sentence and domain order",
    )
    p_emit = sub.add_parser("emit", help="write generated C++ source")
    common(p_emit)
    p_emit.add_argument("-o", "--output", default=None, help="output path (default stdout)")
    p_oracle = sub.add_parser("oracle", help="brute-force count for cross-checking")
    common(p_oracle)
    return parser


def _parse_sizes(pairs: list[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for pair in pairs:
        name, eq, value = pair.partition("=")
        if not eq or not name:
            raise _UsageError(f"--size expects DOMAIN=N, got {pair!r}")
        try:
            n = int(value)
        except ValueError:
            raise _UsageError(f"invalid size {value!r} for domain {name}") from None
        if n < 0:
            raise _UsageError(f"negative size for domain {name}")
        out[name] = n
    return out


def _load(path: str) -> WfomcInstance:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise _UsageError(str(e)) from None
    instance = to_clausal(parse_instance(text))
    problems = validate(instance.sentence)
    if problems:
        raise _UsageError("; ".join(str(p) for p in problems))
    return instance

def _preprocess(instance: WfomcInstance) -> WfomcInstance:
    sk = skolemize(instance)
    return WfomcInstance(drop_redundant(sk.sentence), sk.weights, sk.sizes)


def _sizes_for(instance: WfomcInstance, overrides: dict[str, int]) -> dict[str, int]:
    sizes = {d.name: n for d, n in instance.sizes}
    sizes.update(overrides)
    return sizes


def _trace_to_stderr(message: str) -> None:
    print(message, file=sys.stderr)


def _run(args: argparse.Namespace) -> int:
    overrides = _parse_sizes(args.size)
    trace = _trace_to_stderr if args.trace else None
    instance = _load(args.file)

    if args.command == "oracle":
        sized = WfomcInstance(
            instance.sentence,
            instance.weights,
            tuple(
                sorted(
                    (
                        (d, _sizes_for(instance, overrides).get(d.name))
                        for d in instance.sentence.domains
                    ),
                    key=lambda p: p[0].name,
                )
            ),
        )
        missing = [d.name for d, n in sized.sizes if n is None]
        if missing:
            raise _UsageError(f"no size given for domain {', '.join(sorted(missing))}")
        print(brute_force_wfomc(sized))
        return EXIT_OK

    clausal = _preprocess(instance)
    stats: dict = {}
    program = compile_with_base_cases(clausal, mode=args.mode, trace=trace, stats=stats)
    if trace is not None:
        trace(f"base-case recursion depth: {stats.get('max_recursion_depth', 0)}")

    if args.command == "compile":
        print(format_program(program))
        if args.print_equations:
            for fn in sorted(program.fdomains):
                doms = ", ".join(d.name for d in program.fdomains[fn])
                print(f"# {fn}: domains ({doms})")
                for cl in program.fsentences[fn].sentence.sorted_clauses():
                    print(f"#   {cl!r}")
        return EXIT_OK

    if args.command == "emit":
        emitted = emit_program(program)
        if args.output:
            Path(args.output).write_text(emitted.source_text)
        else:
            sys.stdout.write(emitted.source_text)
        return EXIT_OK

    sizes = _sizes_for(instance, overrides)
    try:
        print(evaluate(program, sizes))
    except EvaluationError as e:
        raise _UsageError(str(e)) from None
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    def on_alarm(_signum, _frame):
        raise _Timeout()

    old_handler = None
    if args.timeout is not None:
        if args.timeout <= 0:
            print("fomc: timeout must be positive", file=sys.stderr)
            return EXIT_USAGE
        old_handler = signal.signal(signal.SIGALRM, on_alarm)
        signal.setitimer(signal.ITIMER_REAL, args.timeout)
    try:
        return _run(args)
    except _Timeout:
        print("fomc: timed out", file=sys.stderr)
        return EXIT_TIMEOUT
    except _UsageError as e:
        print(f"fomc: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"fomc: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OracleLimitError as e:
        print(f"fomc: {e}", file=sys.stderr)
        return EXIT_ORACLE_LIMIT
    except (CompilationFailure, UnsupportedFormulaError, BaseCaseError, EmissionError) as e:
        print(f"fomc: {e}", file=sys.stderr)
        return EXIT_COMPILATION
    finally:
        if args.timeout is not None:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, old_handler)


if __name__ == "__main__":
    raise SystemExit(main())
