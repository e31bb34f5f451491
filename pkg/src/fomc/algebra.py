"""Algebraic expressions over domain sizes, and recursive equations.

Expressions are built from integer constants, size variables, sums,
products, powers, binomial coefficients, interval indicators, bounded
summations, and calls to named functions.  ``simplify`` normalizes
expressions without changing their value at any valuation where all
variables are non-negative integers (domain sizes and summation indices
always are).  ``expr_eval`` evaluates exactly over arbitrary-precision
integers, short-circuiting products at zero so that indicator guards
protect calls from out-of-range arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Union

import gmpy2

from fomc.logic import Domain, WfomcInstance


class AlgebraError(Exception):
    pass


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    terms: tuple["Expr", ...]


@dataclass(frozen=True)
class Mul:
    factors: tuple["Expr", ...]


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: "Expr"


@dataclass(frozen=True)
class Binom:
    n: "Expr"
    k: "Expr"


@dataclass(frozen=True)
class Indicator:
    """[low <= subject <= high]; either bound may be omitted."""

    low: int | None
    subject: "Expr"
    high: int | None


@dataclass(frozen=True)
class Sum:
    index: str
    lo: "Expr"
    hi: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


Expr = Union[Const, Var, Add, Mul, Pow, Binom, Indicator, Sum, Call]

ZERO = Const(0)
ONE = Const(1)


def add(*terms: Expr) -> Expr:
    return simplify(Add(tuple(terms)))


def mul(*factors: Expr) -> Expr:
    return simplify(Mul(tuple(factors)))


def sub(a: Expr, b: Expr) -> Expr:
    return simplify(Add((a, Mul((Const(-1), b)))))


# ---------------------------------------------------------------------------
# Structural ordering.  Products are kept with constants and indicators
# first so that evaluation can short-circuit before reaching calls.

_RANK = {Const: 0, Indicator: 1, Binom: 2, Var: 3, Pow: 4, Add: 5, Sum: 6, Call: 7, Mul: 8}


def expr_key(e: Expr) -> tuple:
    r = _RANK[type(e)]
    if isinstance(e, Const):
        return (r, e.value)
    if isinstance(e, Var):
        return (r, e.name)
    if isinstance(e, Add):
        return (r, tuple(expr_key(t) for t in e.terms))
    if isinstance(e, Mul):
        return (r, tuple(expr_key(f) for f in e.factors))
    if isinstance(e, Pow):
        return (r, expr_key(e.base), expr_key(e.exp))
    if isinstance(e, Binom):
        return (r, expr_key(e.n), expr_key(e.k))
    if isinstance(e, Indicator):
        return (r, e.low is None, e.low, expr_key(e.subject), e.high is None, e.high)
    if isinstance(e, Sum):
        return (r, e.index, expr_key(e.lo), expr_key(e.hi), expr_key(e.body))
    return (r, e.fn, tuple(expr_key(a) for a in e.args))


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Add):
        return frozenset().union(*(free_vars(t) for t in e.terms)) if e.terms else frozenset()
    if isinstance(e, Mul):
        return frozenset().union(*(free_vars(f) for f in e.factors)) if e.factors else frozenset()
    if isinstance(e, Pow):
        return free_vars(e.base) | free_vars(e.exp)
    if isinstance(e, Binom):
        return free_vars(e.n) | free_vars(e.k)
    if isinstance(e, Indicator):
        return free_vars(e.subject)
    if isinstance(e, Sum):
        return free_vars(e.lo) | free_vars(e.hi) | (free_vars(e.body) - {e.index})
    return frozenset().union(*(free_vars(a) for a in e.args)) if e.args else frozenset()


def subst(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Add):
        return Add(tuple(subst(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(subst(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(subst(e.base, mapping), subst(e.exp, mapping))
    if isinstance(e, Binom):
        return Binom(subst(e.n, mapping), subst(e.k, mapping))
    if isinstance(e, Indicator):
        return Indicator(e.low, subst(e.subject, mapping), e.high)
    if isinstance(e, Sum):
        inner = {k: v for k, v in mapping.items() if k != e.index}
        for v in inner.values():
            if e.index in free_vars(v):
                raise AlgebraError(f"substitution would capture summation index {e.index}")
        return Sum(e.index, subst(e.lo, mapping), subst(e.hi, mapping), subst(e.body, inner))
    return Call(e.fn, tuple(subst(a, mapping) for a in e.args))


# ---------------------------------------------------------------------------
# Simplification

_EXPAND_LIMIT = 20


def simplify(e: Expr) -> Expr:
    prev = None
    while prev != e:
        prev = e
        e = _simplify_once(e)
    return e


def _simplify_once(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Add):
        return _simplify_add(tuple(_simplify_once(t) for t in e.terms))
    if isinstance(e, Mul):
        return _simplify_mul(tuple(_simplify_once(f) for f in e.factors))
    if isinstance(e, Pow):
        return _simplify_pow(_simplify_once(e.base), _simplify_once(e.exp))
    if isinstance(e, Binom):
        return _simplify_binom(_simplify_once(e.n), _simplify_once(e.k))
    if isinstance(e, Indicator):
        return _simplify_indicator(e.low, _simplify_once(e.subject), e.high)
    if isinstance(e, Sum):
        return _simplify_sum(e.index, _simplify_once(e.lo), _simplify_once(e.hi), _simplify_once(e.body))
    return Call(e.fn, tuple(_simplify_once(a) for a in e.args))


def _split_term(t: Expr) -> tuple[int, tuple[Expr, ...]]:
    if isinstance(t, Const):
        return t.value, ()
    if isinstance(t, Mul):
        coeff = 1
        rest = []
        for f in t.factors:
            if isinstance(f, Const):
                coeff *= f.value
            else:
                rest.append(f)
        return coeff, tuple(rest)
    return 1, (t,)


def _simplify_add(terms: tuple[Expr, ...]) -> Expr:
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    coeffs: dict[tuple[Expr, ...], int] = {}
    order: list[tuple[Expr, ...]] = []
    for t in flat:
        c, rest = _split_term(t)
        if rest not in coeffs:
            coeffs[rest] = 0
            order.append(rest)
        coeffs[rest] += c
    out: list[Expr] = []
    const_part = coeffs.pop((), 0) if () in coeffs else 0
    for rest in sorted((r for r in order if r in coeffs), key=lambda r: tuple(map(expr_key, r))):
        c = coeffs[rest]
        if c == 0:
            continue
        if c == 1 and len(rest) == 1:
            out.append(rest[0])
        elif c == 1:
            out.append(Mul(rest))
        else:
            out.append(Mul((Const(c),) + rest))
    if const_part != 0:
        out.append(Const(const_part))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def _simplify_mul(factors: tuple[Expr, ...]) -> Expr:
    flat: list[Expr] = []
    for f in factors:
        if isinstance(f, Mul):
            flat.extend(f.factors)
        else:
            flat.append(f)
    coeff = 1
    rest: list[Expr] = []
    for f in flat:
        if isinstance(f, Const):
            coeff *= f.value
        else:
            rest.append(f)
    if coeff == 0:
        return ZERO
    rest.sort(key=expr_key)
    if not rest:
        return Const(coeff)
    if coeff != 1:
        rest.insert(0, Const(coeff))
    if len(rest) == 1:
        return rest[0]
    return Mul(tuple(rest))


def _simplify_pow(base: Expr, exp: Expr) -> Expr:
    if isinstance(exp, Const):
        if exp.value == 0:
            return ONE
        if exp.value == 1:
            return base
        if isinstance(base, Const) and exp.value >= 0:
            return Const(base.value**exp.value)
    if isinstance(base, Const) and base.value == 1:
        return ONE
    return Pow(base, exp)


def _simplify_binom(n: Expr, k: Expr) -> Expr:
    if isinstance(n, Const) and isinstance(k, Const):
        if k.value < 0 or n.value < 0 or k.value > n.value:
            return ZERO
        import math

        return Const(math.comb(n.value, k.value))
    if isinstance(k, Const) and isinstance(n, Var):
        # size variables are non-negative, so these are exact
        if k.value == 0:
            return ONE
        if k.value == 1:
            return n
        if k.value < 0:
            return ZERO
    return Binom(n, k)


def _simplify_indicator(low: int | None, subject: Expr, high: int | None) -> Expr:
    if low is None and high is None:
        return ONE
    if isinstance(subject, Const):
        ok = (low is None or low <= subject.value) and (high is None or subject.value <= high)
        return ONE if ok else ZERO
    if low is not None and high is not None and low > high:
        return ZERO
    if isinstance(subject, Var) and high is None and low is not None and low <= 0:
        return ONE
    return Indicator(low, subject, high)


def _simplify_sum(index: str, lo: Expr, hi: Expr, body: Expr) -> Expr:
    if isinstance(body, Const) and body.value == 0:
        return ZERO
    if isinstance(lo, Const) and isinstance(hi, Const):
        if hi.value < lo.value:
            return ZERO
        if hi.value - lo.value + 1 <= _EXPAND_LIMIT:
            return _simplify_add(
                tuple(subst(body, {index: Const(j)}) for j in range(lo.value, hi.value + 1))
            )
        return Sum(index, lo, hi, body)
    expanded = _expand_indicator_sum(index, lo, hi, body)
    if expanded is not None:
        return expanded
    return Sum(index, lo, hi, body)


def _expand_indicator_sum(index: str, lo: Expr, hi: Expr, body: Expr) -> Expr | None:
    """Rewrite ``sum_{i=lo}^{hi} [a <= i <= b] * g(i)`` into the explicit
    terms ``g(a) + ... + g(min(hi, b))``, guarding each term with
    ``[hi >= j]`` unless the term is already zero for out-of-range sizes."""
    if not isinstance(lo, Const):
        return None
    factors = body.factors if isinstance(body, Mul) else (body,)
    a: int | None = None
    b: int | None = None
    rest: list[Expr] = []
    for f in factors:
        if isinstance(f, Indicator) and f.subject == Var(index) and f.high is not None:
            fl = f.low if f.low is not None else 0
            a = fl if a is None else max(a, fl)
            b = f.high if b is None else min(b, f.high)
        else:
            rest.append(f)
    if b is None:
        return None
    start = max(a if a is not None else 0, lo.value)
    if b < start:
        return ZERO
    if b - start + 1 > _EXPAND_LIMIT:
        return None
    terms = []
    for j in range(start, b + 1):
        t = _simplify_once(subst(_simplify_mul(tuple(rest)), {index: Const(j)}))
        if not _self_guarding(t, hi, j):
            t = _simplify_mul((Indicator(j, hi, None), t))
        terms.append(t)
    return _simplify_add(tuple(terms))


def _self_guarding(term: Expr, hi: Expr, j: int) -> bool:
    """True when ``term`` is certainly zero whenever ``hi < j`` (so the
    explicit ``[hi >= j]`` guard would be redundant)."""
    if j == 0 and isinstance(hi, Var):
        return True  # sizes are non-negative
    factors = term.factors if isinstance(term, Mul) else (term,)
    for f in factors:
        if isinstance(f, Binom) and f.n == hi and isinstance(f.k, Const) and f.k.value >= j:
            return True
        if f == hi and isinstance(hi, Var) and j == 1:
            return True  # a binom(hi, 1) that folded to hi
    return False


# ---------------------------------------------------------------------------
# Evaluation

_MPZ = type(gmpy2.mpz(0))


def binomial(n, k) -> "gmpy2.mpz":
    if k < 0 or n < 0 or k > n:
        return gmpy2.mpz(0)
    return gmpy2.bincoef(n, k)


def expr_eval(
    e: Expr,
    env: Mapping[str, int],
    call: Callable[[str, tuple[int, ...]], int] | None = None,
    step: Callable[[], None] | None = None,
):
    """Exact evaluation.  ``call`` resolves function applications;
    ``step`` is invoked once per node visit (for budget accounting)."""
    if step is not None:
        step()
    if isinstance(e, Const):
        return gmpy2.mpz(e.value)
    if isinstance(e, Var):
        try:
            return gmpy2.mpz(env[e.name])
        except KeyError:
            raise AlgebraError(f"unbound size variable {e.name}") from None
    if isinstance(e, Add):
        total = gmpy2.mpz(0)
        for t in e.terms:
            total += expr_eval(t, env, call, step)
        return total
    if isinstance(e, Mul):
        total = gmpy2.mpz(1)
        for f in e.factors:
            total *= expr_eval(f, env, call, step)
            if total == 0:
                return total
        return total
    if isinstance(e, Pow):
        base = expr_eval(e.base, env, call, step)
        exp = expr_eval(e.exp, env, call, step)
        if exp < 0:
            raise AlgebraError(f"negative exponent {exp}")
        return base**exp
    if isinstance(e, Binom):
        return binomial(expr_eval(e.n, env, call, step), expr_eval(e.k, env, call, step))
    if isinstance(e, Indicator):
        v = expr_eval(e.subject, env, call, step)
        ok = (e.low is None or e.low <= v) and (e.high is None or v <= e.high)
        return gmpy2.mpz(1 if ok else 0)
    if isinstance(e, Sum):
        lo = expr_eval(e.lo, env, call, step)
        hi = expr_eval(e.hi, env, call, step)
        total = gmpy2.mpz(0)
        inner = dict(env)
        j = lo
        while j <= hi:
            inner[e.index] = j
            total += expr_eval(e.body, inner, call, step)
            j += 1
        return total
    if isinstance(e, Call):
        if call is None:
            raise AlgebraError(f"no resolver for call to {e.fn}")
        args = tuple(int(expr_eval(a, env, call, step)) for a in e.args)
        return call(e.fn, args)
    raise AlgebraError(f"cannot evaluate {e!r}")


# ---------------------------------------------------------------------------
# Equations and programs


@dataclass(frozen=True)
class Equation:
    """``fn(head) = body`` where each head position is a Var or Const."""

    fn: str
    head: tuple[Expr, ...]
    body: Expr

    def is_definition(self) -> bool:
        return all(isinstance(h, Var) for h in self.head)

    def constant_positions(self) -> tuple[int, ...]:
        return tuple(i for i, h in enumerate(self.head) if isinstance(h, Const))


@dataclass
class Program:
    """Equations plus the compilation bookkeeping: ``fsentences`` maps a
    function to the weighted sentence it counts, ``fdomains`` to the
    domain each parameter position measures."""

    equations: tuple[Equation, ...]
    entry: str
    fsentences: dict[str, WfomcInstance]
    fdomains: dict[str, tuple[Domain, ...]]

    def definitions(self) -> dict[str, Equation]:
        return {e.fn: e for e in self.equations if e.is_definition()}

    def simplified(self) -> "Program":
        eqs = tuple(Equation(e.fn, e.head, simplify(e.body)) for e in self.equations)
        return Program(eqs, self.entry, self.fsentences, self.fdomains)


# ---------------------------------------------------------------------------
# Printing


def format_expr(e: Expr) -> str:
    return _fmt(e, 0)


def _fmt(e: Expr, prec: int) -> str:
    # precedence: 0 sum/add, 1 mul, 2 pow operands
    if isinstance(e, Const):
        s = str(e.value)
        return f"({s})" if e.value < 0 and prec >= 2 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        # positive terms first, purely for readability (n - l, not -l + n)
        ordered = sorted(e.terms, key=lambda t: _split_term(t)[0] < 0)
        parts: list[str] = []
        for t in ordered:
            c, rest = _split_term(t)
            if c < 0 and parts:
                flipped = _simplify_mul((Const(-c),) + rest)
                parts.append(f"- {_fmt(flipped, 1)}")
            elif c < 0:
                flipped = _simplify_mul((Const(-c),) + rest)
                parts.append(f"-{_fmt(flipped, 1)}")
            elif parts:
                parts.append(f"+ {_fmt(t, 1)}")
            else:
                parts.append(_fmt(t, 0))
        s = " ".join(parts)
        return f"({s})" if prec >= 1 else s
    if isinstance(e, Mul):
        s = " * ".join(_fmt(f, 1) for f in e.factors)
        return f"({s})" if prec >= 2 else s
    if isinstance(e, Pow):
        return f"{_fmt(e.base, 2)}^{_fmt(e.exp, 2)}"
    if isinstance(e, Binom):
        return f"binom({_fmt(e.n, 0)}, {_fmt(e.k, 0)})"
    if isinstance(e, Indicator):
        inner = _fmt(e.subject, 0)
        if e.low is not None and e.high is not None:
            return f"[{e.low} <= {inner} <= {e.high}]"
        if e.low is not None:
            return f"[{e.low} <= {inner}]"
        return f"[{inner} <= {e.high}]"
    if isinstance(e, Sum):
        return f"sum_{{{e.index}={_fmt(e.lo, 2)}}}^{{{_fmt(e.hi, 2)}}} {_fmt(e.body, 1)}"
    args = ", ".join(_fmt(a, 0) for a in e.args)
    return f"{e.fn}({args})"


def format_equation(eq: Equation) -> str:
    head = ", ".join(format_expr(h) for h in eq.head)
    return f"{eq.fn}({head}) = {format_expr(eq.body)}"


def format_program(program: Program) -> str:
    ordered = sorted(
        program.equations,
        key=lambda e: (e.fn != program.entry, e.fn, len(e.constant_positions()), tuple(map(expr_key, e.head))),
    )
    return "\n".join(format_equation(e) for e in ordered)
