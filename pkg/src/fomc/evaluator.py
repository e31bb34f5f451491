"""Memoized evaluation of counting programs at concrete domain sizes.

Each function application picks the equation whose constant head
positions match the arguments (most constants wins, earliest equation
breaks ties) and evaluates its body with exact integer arithmetic.
Results are memoized per ``(function, arguments)``.
"""

from __future__ import annotations

import sys
from typing import Mapping

import gmpy2

from fomc.algebra import Const, Equation, Program, Var, expr_eval


class EvaluationError(Exception):
    pass


class MissingBaseCase(EvaluationError):
    pass


class StepBudgetExceeded(EvaluationError):
    pass


def match_equation(program: Program, fn: str, args: tuple) -> Equation:
    """The most specific equation of ``fn`` matching ``args``."""
    best: Equation | None = None
    best_score = -1
    for eq in program.equations:
        if eq.fn != fn or len(eq.head) != len(args):
            continue
        if all(
            not isinstance(h, Const) or h.value == a for h, a in zip(eq.head, args)
        ):
            score = sum(isinstance(h, Const) for h in eq.head)
            if score > best_score:
                best, best_score = eq, score
    if best is None:
        shown = ", ".join(str(a) for a in args)
        raise MissingBaseCase(f"no equation matches {fn}({shown})")
    return best


def evaluate(
    program: Program,
    sizes: Mapping[str, int],
    *,
    max_steps: int = 10**9,
    memo: bool = True,
    counters: dict[str, int] | None = None,
) -> "gmpy2.mpz":
    """The program's entry function at the given domain sizes (keyed by
    domain name).  ``counters`` (if given) accumulates how many times
    each function was evaluated; ``max_steps`` bounds that total."""
    table: dict | None = {} if memo else None
    steps = 0

    def call(fn: str, raw_args: tuple) -> "gmpy2.mpz":
        nonlocal steps
        args = tuple(gmpy2.mpz(a) for a in raw_args)
        if any(a < 0 for a in args):
            shown = ", ".join(str(a) for a in args)
            raise MissingBaseCase(f"{fn}({shown}) reached a negative argument")
        if table is not None:
            hit = table.get((fn, args))
            if hit is not None:
                return hit
        steps += 1
        if steps > max_steps:
            raise StepBudgetExceeded(f"more than {max_steps} function evaluations")
        if counters is not None:
            counters[fn] = counters.get(fn, 0) + 1
        eq = match_equation(program, fn, args)
        env = {h.name: a for h, a in zip(eq.head, args) if isinstance(h, Var)}
        value = expr_eval(eq.body, env, call)
        if table is not None:
            table[(fn, args)] = value
        return value

    doms = program.fdomains[program.entry]
    try:
        entry_args = tuple(gmpy2.mpz(sizes[d.name]) for d in doms)
    except KeyError as missing:
        raise EvaluationError(f"no size given for domain {missing.args[0]}") from None
    if any(a < 0 for a in entry_args):
        raise EvaluationError("domain sizes must be non-negative")

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 100_000))
    try:
        return call(program.entry, entry_args)
    finally:
        sys.setrecursionlimit(limit)
