from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from fomc.logic import (
    Clause,
    Constant,
    Domain,
    Equality,
    Literal,
    PredApp,
    Predicate,
    Variable,
    clause,
    doms,
    sentence_from_clauses,
    substitute,
    validate,
)

GAMMA = Domain("Gamma")
DELTA = Domain("Delta")


def test_clause_literals_are_deduplicated_and_sorted():
    P = Predicate("P", 1, (GAMMA,))
    Q = Predicate("Q", 1, (GAMMA,))
    x = Variable("x", GAMMA)
    c1 = clause([Literal(PredApp(Q, (x,))), Literal(PredApp(P, (x,))), Literal(PredApp(P, (x,)))], {"x": GAMMA})
    c2 = clause([Literal(PredApp(P, (x,))), Literal(PredApp(Q, (x,)))], {"x": GAMMA})
    assert c1 == c2
    assert [l.atom.pred.name for l in c1.literals] == ["P", "Q"]


def test_substitute_replaces_and_drops_binder():
    P = Predicate("P", 2, (GAMMA, GAMMA))
    x, y = Variable("x", GAMMA), Variable("y", GAMMA)
    c1 = Constant("c1", GAMMA)
    cl = clause([Literal(PredApp(P, (x, y)), False), Literal(Equality(x, y))], {"x": GAMMA, "y": GAMMA})
    out = substitute(cl, {"y": c1})
    assert out.binders == (("x", GAMMA),)
    assert Literal(PredApp(P, (x, c1)), False) in out.literals
    assert Literal(Equality(x, c1)) in out.literals


def test_substitute_keeps_constant_equalities_verbatim():
    P = Predicate("P", 2, (GAMMA, GAMMA))
    x, y = Variable("x", GAMMA), Variable("y", GAMMA)
    c1 = Constant("c1", GAMMA)
    cl = clause([Literal(PredApp(P, (x, y)), False), Literal(Equality(x, y))], {"x": GAMMA, "y": GAMMA})
    out = substitute(cl, {"x": c1, "y": c1})
    assert Literal(Equality(c1, c1)) in out.literals
    assert out.binders == ()


@given(st.permutations(["x", "y", "z"]))
def test_substitute_is_compositional(order):
    P = Predicate("P", 3, (GAMMA, GAMMA, GAMMA))
    vs = {n: Variable(n, GAMMA) for n in "xyz"}
    consts = {n: Constant(f"k_{n}", GAMMA) for n in "xyz"}
    cl = clause([Literal(PredApp(P, (vs["x"], vs["y"], vs["z"])))], {n: GAMMA for n in "xyz"})
    step = cl
    for n in order:
        step = substitute(step, {n: consts[n]})
    assert step == substitute(cl, {n: consts[n] for n in "xyz"})


def test_doms_is_union_over_literals():
    P = Predicate("P", 2, (GAMMA, DELTA))
    Q = Predicate("Q", 1, (GAMMA,))
    x, y = Variable("x", GAMMA), Variable("y", DELTA)
    cl = clause([Literal(PredApp(P, (x, y))), Literal(PredApp(Q, (x,)))], {"x": GAMMA, "y": DELTA})
    assert doms(cl) == frozenset({GAMMA, DELTA})
    assert doms(cl.literals[0]) == frozenset({GAMMA, DELTA})
    assert doms(cl.literals[1]) == frozenset({GAMMA})
    # constants do not contribute
    c = Constant("c", DELTA)
    cl2 = substitute(cl, {"y": c})
    assert doms(cl2) == frozenset({GAMMA})


def test_validate_flags_arity_and_sort_errors():
    P = Predicate("P", 2, (GAMMA, DELTA))
    x = Variable("x", GAMMA)
    y = Variable("y", GAMMA)
    bad = clause([Literal(PredApp(P, (x, y)))], {"x": GAMMA, "y": GAMMA})
    sent = sentence_from_clauses([bad])
    messages = " ".join(str(d) for d in validate(sent))
    assert "expects Delta" in messages


def test_validate_flags_unbound_and_unused_variables():
    P = Predicate("P", 1, (GAMMA,))
    x = Variable("x", GAMMA)
    cl = Clause((Literal(PredApp(P, (x,))),), (("x", GAMMA), ("w", GAMMA)))
    sent = sentence_from_clauses([cl])
    messages = [str(d) for d in validate(sent)]
    assert any("unused binder w" in m for m in messages)

    cl2 = Clause((Literal(PredApp(P, (x,))),), ())
    sent2 = sentence_from_clauses([cl2])
    assert any("unbound variable x" in str(d) for d in validate(sent2))


def test_validate_accepts_subdomain_argument():
    sub = Domain("Sub", parent=GAMMA)
    P = Predicate("P", 1, (GAMMA,))
    v = Variable("v", sub)
    cl = clause([Literal(PredApp(P, (v,)))], {"v": sub})
    sent = sentence_from_clauses([cl], extra_domains=(GAMMA, sub))
    assert validate(sent) == []


def test_validate_flags_cross_sort_equality():
    x, y = Variable("x", GAMMA), Variable("y", DELTA)
    P = Predicate("P", 2, (GAMMA, DELTA))
    cl = clause([Literal(PredApp(P, (x, y)), False), Literal(Equality(x, y))], {"x": GAMMA, "y": DELTA})
    sent = sentence_from_clauses([cl])
    assert any("different sorts" in str(d) for d in validate(sent))


def test_predicate_arity_mismatch_raises():
    with pytest.raises(ValueError):
        Predicate("P", 2, (GAMMA,))
    P = Predicate("P", 1, (GAMMA,))
    with pytest.raises(ValueError):
        PredApp(P, (Variable("x", GAMMA), Variable("y", GAMMA)))
