from __future__ import annotations

import math

import pytest

from fomc.algebra import Add, Call, Const, Equation, Mul, Program, Var, sub
from fomc.basecases import compile_with_base_cases
from fomc.evaluator import (
    EvaluationError,
    MissingBaseCase,
    StepBudgetExceeded,
    evaluate,
    match_equation,
)
from fomc.logic import Domain

from corpus import bijections_clausal, friends_smokers, friends_smokers_closed_form

m, n = Var("m"), Var("n")
D = Domain("D")


def fib_program() -> Program:
    body = Add((Call("f", (sub(m, Const(1)),)), Call("f", (sub(m, Const(2)),))))
    return Program(
        (
            Equation("f", (m,), body),
            Equation("f", (Const(0),), Const(0)),
            Equation("f", (Const(1),), Const(1)),
        ),
        "f",
        {},
        {"f": (D,)},
    )


def test_match_equation_prefers_most_constants():
    prog = fib_program()
    assert match_equation(prog, "f", (0,)).body == Const(0)
    assert match_equation(prog, "f", (1,)).body == Const(1)
    assert isinstance(match_equation(prog, "f", (5,)).body, Add)


def test_match_equation_missing():
    prog = Program((Equation("f", (Const(3),), Const(1)),), "f", {}, {"f": (D,)})
    with pytest.raises(MissingBaseCase):
        match_equation(prog, "f", (2,))


def test_evaluate_memoized_recursion():
    prog = fib_program()
    counters: dict[str, int] = {}
    assert evaluate(prog, {"D": 30}, counters=counters) == 832040
    assert counters["f"] == 31  # each argument evaluated once


def test_evaluate_without_memo_matches():
    prog = fib_program()
    assert evaluate(prog, {"D": 12}, memo=False) == evaluate(prog, {"D": 12})


def test_step_budget():
    prog = fib_program()
    with pytest.raises(StepBudgetExceeded):
        evaluate(prog, {"D": 25}, memo=False, max_steps=1000)


def test_negative_argument_is_a_missing_base_case():
    body = Call("f", (sub(m, Const(1)),))
    prog = Program((Equation("f", (m,), body),), "f", {}, {"f": (D,)})
    with pytest.raises(MissingBaseCase, match="negative"):
        evaluate(prog, {"D": 3})


def test_missing_size_and_negative_size():
    prog = fib_program()
    with pytest.raises(EvaluationError):
        evaluate(prog, {})
    with pytest.raises(EvaluationError):
        evaluate(prog, {"D": -1})


def test_bijections_factorial_medium():
    prog = compile_with_base_cases(bijections_clausal())
    assert evaluate(prog, {"Gamma": 40, "Delta": 40}) == math.factorial(40)


def test_friends_smokers_closed_form_values():
    prog = compile_with_base_cases(friends_smokers())
    for k in [0, 1, 2, 5, 9]:
        assert evaluate(prog, {"Delta": k}) == friends_smokers_closed_form(k)
