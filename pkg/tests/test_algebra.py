from __future__ import annotations

import random

import gmpy2
import pytest

from fomc.algebra import (
    Add,
    AlgebraError,
    Binom,
    Call,
    Const,
    Equation,
    Indicator,
    Mul,
    Pow,
    Sum,
    Var,
    binomial,
    expr_eval,
    format_equation,
    format_expr,
    free_vars,
    simplify,
    sub,
    subst,
)

m, n, l, k = Var("m"), Var("n"), Var("l"), Var("k")


def ev(e, env=None, call=None):
    return int(expr_eval(e, env or {}, call))


def test_constant_folding_and_identities():
    assert simplify(Mul((Const(0), m))) == Const(0)
    assert simplify(Mul((Const(1), m))) == m
    assert simplify(Pow(m, Const(0))) == Const(1)
    assert simplify(Pow(Const(0), Const(0))) == Const(1)
    assert simplify(Pow(Const(1), m)) == Const(1)
    assert simplify(Pow(Const(2), Const(10))) == Const(1024)
    assert simplify(Add((Const(2), Const(3), m))) == Add((m, Const(5)))


def test_zero_power_of_variable_is_kept():
    e = simplify(Pow(Const(0), m))
    assert e == Pow(Const(0), m)
    assert ev(e, {"m": 0}) == 1
    assert ev(e, {"m": 3}) == 0


def test_like_terms_cancel_including_calls():
    g0 = Call("g", (m,))
    e = simplify(Add((g0, Mul((Const(-1), g0)))))
    assert e == Const(0)
    e2 = simplify(Add((Const(1), n, Const(-1))))
    assert e2 == n


def test_mul_orders_guards_before_calls():
    e = simplify(Mul((Call("g", (m,)), Indicator(0, k, 1), Const(3))))
    assert isinstance(e, Mul)
    assert isinstance(e.factors[0], Const)
    assert isinstance(e.factors[1], Indicator)
    assert isinstance(e.factors[2], Call)


def test_binom_folding_for_small_constant_k():
    assert simplify(Binom(m, Const(0))) == Const(1)
    assert simplify(Binom(m, Const(1))) == m
    assert simplify(Binom(Const(5), Const(2))) == Const(10)
    assert simplify(Binom(Const(3), Const(5))) == Const(0)
    assert binomial(gmpy2.mpz(-1), gmpy2.mpz(0)) == 0


def test_indicator_folding():
    assert simplify(Indicator(0, Const(1), 1)) == Const(1)
    assert simplify(Indicator(0, Const(2), 1)) == Const(0)
    assert simplify(Indicator(None, m, None)) == Const(1)
    assert simplify(Indicator(0, m, None)) == Const(1)  # sizes are non-negative
    assert simplify(Indicator(2, m, 1)) == Const(0)


def test_constant_bounded_sum_expands():
    e = Sum("j", Const(0), Const(3), Var("j"))
    assert simplify(e) == Const(6)
    empty = Sum("j", Const(2), Const(1), Var("j"))
    assert simplify(empty) == Const(0)


def test_indicator_sum_expansion_matches_two_term_form():
    # sum_{k=0}^{m} [0 <= k <= 1] * binom(m, k) * g(l - 1, m - k)
    body = Mul((Indicator(0, k, 1), Binom(m, k), Call("g", (sub(l, Const(1)), sub(m, k)))))
    e = simplify(Sum("k", Const(0), m, body))
    expected = simplify(
        Add((
            Call("g", (sub(l, Const(1)), m)),
            Mul((m, Call("g", (sub(l, Const(1)), sub(m, Const(1)))))),
        ))
    )
    assert e == expected


def test_indicator_sum_expansion_keeps_guard_when_needed():
    # sum_{k=0}^{n} [2 <= k <= 2] * 5 has no self-guarding factor, so the
    # expansion must keep [2 <= n]
    e = simplify(Sum("k", Const(0), n, Mul((Indicator(2, k, 2), Const(5)))))
    assert ev(e, {"n": 1}) == 0
    assert ev(e, {"n": 2}) == 5
    assert ev(e, {"n": 7}) == 5


def test_guarded_expansion_protects_recursive_calls():
    calls = []

    def resolver(fn, args):
        calls.append((fn, args))
        if any(a < 0 for a in args):
            raise AssertionError("called with a negative argument")
        return gmpy2.mpz(1)

    body = Mul((Indicator(0, k, 2), Binom(n, k), Call("g", (sub(n, k),))))
    e = simplify(Sum("k", Const(0), n, body))
    assert ev(e, {"n": 1}, resolver) == 2  # k = 0 and k = 1 survive
    assert all(a >= 0 for _, args in calls for a in args)


def test_subst_respects_summation_binding():
    e = Sum("j", Const(0), m, Mul((Var("j"), n)))
    out = subst(e, {"j": Const(9), "n": Const(2)})
    assert out == Sum("j", Const(0), m, Mul((Var("j"), Const(2))))
    with pytest.raises(AlgebraError):
        subst(e, {"n": Var("j")})


def test_free_vars():
    e = Sum("j", Const(0), m, Mul((Var("j"), n)))
    assert free_vars(e) == {"m", "n"}


def test_eval_basics():
    assert ev(Binom(Const(4), Const(2))) == 6
    assert ev(Pow(Const(-1), Const(3))) == -1
    assert ev(Indicator(0, Const(5), 4)) == 0
    assert ev(Sum("j", Const(0), Const(4), Var("j"))) == 10
    with pytest.raises(AlgebraError):
        ev(Pow(Const(2), Const(-1)))
    with pytest.raises(AlgebraError):
        ev(m, {})


def test_eval_short_circuits_zero_products():
    def resolver(fn, args):
        raise AssertionError("should not be called")

    e = Mul((Indicator(2, k, None), Call("f", (sub(k, Const(2)),))))
    assert ev(e, {"k": 0}, resolver) == 0


def test_format_example_equation():
    eq = Equation(
        "f",
        (m, n),
        Sum(
            "l",
            Const(0),
            n,
            simplify(Mul((Binom(n, l), Pow(Const(-1), sub(n, l)), Call("g", (l, m))))),
        ),
    )
    assert (
        format_equation(eq)
        == "f(m, n) = sum_{l=0}^{n} binom(n, l) * (-1)^(n - l) * g(l, m)"
    )


def test_format_negative_terms_and_powers():
    assert format_expr(simplify(Add((m, Mul((Const(-1), n)))))) == "m - n"
    assert format_expr(Pow(Const(0), m)) == "0^m"
    assert format_expr(Indicator(0, k, 1)) == "[0 <= k <= 1]"


def _random_expr(rng: random.Random, depth: int):
    """Expressions that are safe to evaluate at any small non-negative
    valuation: exponents, call arguments, and sum bounds stay non-negative."""
    nonneg_atoms = [Const(rng.randrange(0, 4)), Var(rng.choice("mn")), Var("j")]

    def nonneg(d):
        if d == 0:
            return rng.choice(nonneg_atoms)
        return Add(tuple(nonneg(d - 1) for _ in range(rng.randrange(1, 3))))

    if depth == 0:
        return rng.choice(nonneg_atoms + [Const(rng.randrange(-3, 4))])
    kind = rng.randrange(8)
    if kind == 0:
        return Add(tuple(_random_expr(rng, depth - 1) for _ in range(rng.randrange(1, 4))))
    if kind == 1:
        return Mul(tuple(_random_expr(rng, depth - 1) for _ in range(rng.randrange(1, 4))))
    if kind == 2:
        return Pow(_random_expr(rng, depth - 1), nonneg(1))
    if kind == 3:
        return Binom(_random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if kind == 4:
        low = rng.choice([None, rng.randrange(-1, 3)])
        high = rng.choice([None, rng.randrange(0, 4)])
        if low is None and high is None:
            high = 2
        return Indicator(low, _random_expr(rng, depth - 1), high)
    if kind == 5:
        return Sum("j", Const(0), nonneg(0), _random_expr(rng, depth - 1))
    if kind == 6:
        return Call("f", (nonneg(1),))
    return rng.choice(nonneg_atoms)


def _table_call(fn, args):
    assert fn == "f"
    return gmpy2.mpz(args[0] * args[0] + 3)


def test_simplify_preserves_values_on_random_expressions():
    rng = random.Random(20240817)
    for trial in range(1000):
        e = _random_expr(rng, rng.randrange(1, 4))
        s = simplify(e)
        for env in [{"m": 0, "n": 0}, {"m": 1, "n": 2}, {"m": 3, "n": 1}]:
            scoped = dict(env, j=1)
            assert expr_eval(e, scoped, _table_call) == expr_eval(
                s, scoped, _table_call
            ), f"trial {trial}: {format_expr(e)} vs {format_expr(s)}"


def test_simplify_is_idempotent_on_random_expressions():
    rng = random.Random(7)
    for _ in range(300):
        e = simplify(_random_expr(rng, 3))
        assert simplify(e) == e
