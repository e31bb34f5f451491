"""Hand-built clausal sentences shared across the test suite.

These are constructed directly on the core types (not via the parser)
so that oracle and compiler tests do not depend on the frontend.
"""

from __future__ import annotations

import math

from fomc.logic import (
    Clause,
    Constant,
    Domain,
    Equality,
    Literal,
    PredApp,
    Predicate,
    Sentence,
    Variable,
    WfomcInstance,
    clause,
    make_instance,
    sentence_from_clauses,
)

GAMMA = Domain("Gamma")
DELTA = Domain("Delta")


def lit(pred: Predicate, *terms, positive: bool = True) -> Literal:
    return Literal(PredApp(pred, tuple(terms)), positive)


def neq(a, b) -> Literal:
    """Disequality constraint, encoded as a positive equality literal."""
    return Literal(Equality(a, b), True)


def skolem_pair_sentence() -> WfomcInstance:
    """Skolemization of `every Gamma element is related to some Delta
    element`: the four-clause result with the -1 weighted predicate."""
    P = Predicate("P", 2, (GAMMA, DELTA))
    Z = Predicate("Z", 1, (GAMMA,))
    S = Predicate("S", 1, (GAMMA,))
    x = Variable("x", GAMMA)
    y = Variable("y", DELTA)
    cls = [
        clause([lit(Z, x)], {"x": GAMMA}),
        clause([lit(Z, x), lit(P, x, y, positive=False)], {"x": GAMMA, "y": DELTA}),
        clause([lit(S, x), lit(Z, x)], {"x": GAMMA}),
        clause([lit(S, x), lit(P, x, y, positive=False)], {"x": GAMMA, "y": DELTA}),
    ]
    sent = sentence_from_clauses(cls, extra_domains=(GAMMA, DELTA))
    return make_instance(sent, weights={S: (1, -1)})


def existential_pair_sentence() -> WfomcInstance:
    """The same sentence before Skolemization: A x. E y. P(x, y)."""
    P = Predicate("P", 2, (GAMMA, DELTA))
    x = Variable("x", GAMMA)
    y = Variable("y", DELTA)
    c = clause([lit(P, x, y)], {"x": GAMMA}, exists=[("y", DELTA)])
    return make_instance(sentence_from_clauses([c], extra_domains=(GAMMA, DELTA)))


def bijections_clausal() -> WfomcInstance:
    """Bijections between Gamma and Delta, after Skolemization and
    redundancy removal: units for the Z predicates plus the four-clause
    core with the two -1 weighted S predicates."""
    P = Predicate("P", 2, (GAMMA, DELTA))
    Z1 = Predicate("Z1", 1, (GAMMA,))
    S1 = Predicate("S1", 1, (GAMMA,))
    Z2 = Predicate("Z2", 1, (DELTA,))
    S2 = Predicate("S2", 1, (DELTA,))
    x = Variable("x", GAMMA)
    z_g = Variable("z", GAMMA)
    y = Variable("y", DELTA)
    z_d = Variable("z", DELTA)
    cls = [
        clause([lit(Z1, x)], {"x": GAMMA}),
        clause([lit(Z2, y)], {"y": DELTA}),
        clause([lit(S1, x), lit(P, x, y, positive=False)], {"x": GAMMA, "y": DELTA}),
        clause([lit(S2, y), lit(P, x, y, positive=False)], {"x": GAMMA, "y": DELTA}),
        clause(
            [lit(P, x, y, positive=False), lit(P, x, z_d, positive=False), neq(y, z_d)],
            {"x": GAMMA, "y": DELTA, "z": DELTA},
        ),
        clause(
            [lit(P, x, y, positive=False), lit(P, z_g, y, positive=False), neq(x, z_g)],
            {"x": GAMMA, "y": DELTA, "z": GAMMA},
        ),
    ]
    sent = sentence_from_clauses(cls, extra_domains=(GAMMA, DELTA))
    return make_instance(sent, weights={S1: (1, -1), S2: (1, -1)})


def functions_clausal() -> WfomcInstance:
    """Total functions from Gamma to Delta, after Skolemization and
    redundancy removal: count must be |Delta| ** |Gamma|."""
    P = Predicate("P", 2, (GAMMA, DELTA))
    Z = Predicate("Z", 1, (GAMMA,))
    S = Predicate("S", 1, (GAMMA,))
    x = Variable("x", GAMMA)
    y = Variable("y", DELTA)
    z = Variable("z", DELTA)
    cls = [
        clause([lit(Z, x)], {"x": GAMMA}),
        clause([lit(S, x), lit(P, x, y, positive=False)], {"x": GAMMA, "y": DELTA}),
        clause(
            [lit(P, x, y, positive=False), lit(P, x, z, positive=False), neq(y, z)],
            {"x": GAMMA, "y": DELTA, "z": DELTA},
        ),
    ]
    sent = sentence_from_clauses(cls, extra_domains=(GAMMA, DELTA))
    return make_instance(sent, weights={S: (1, -1)})


def friends_smokers() -> WfomcInstance:
    """Smoking spreads along friendship and implies cancer."""
    S = Predicate("S", 1, (DELTA,))
    C = Predicate("C", 1, (DELTA,))
    F = Predicate("F", 2, (DELTA, DELTA))
    x = Variable("x", DELTA)
    y = Variable("y", DELTA)
    cls = [
        clause(
            [lit(S, x, positive=False), lit(F, x, y, positive=False), lit(S, y)],
            {"x": DELTA, "y": DELTA},
        ),
        clause([lit(S, x, positive=False), lit(C, x)], {"x": DELTA}),
    ]
    return make_instance(sentence_from_clauses(cls, extra_domains=(DELTA,)))


def friends_smokers_closed_form(n: int) -> int:
    return sum(
        math.comb(n, k) * 2 ** (n * n - k * (n - k) + n - k) for k in range(n + 1)
    )


def subdomain_unit_sentence(with_tautology: bool) -> WfomcInstance:
    """A binary predicate over Gamma with a unit clause over a strict
    subdomain; optionally smoothed with a tautology over the full domain."""
    sub = Domain("GammaSub", parent=GAMMA)
    P = Predicate("P", 2, (GAMMA, GAMMA))
    y = Variable("y", sub)
    z = Variable("z", sub)
    yg = Variable("y", GAMMA)
    zg = Variable("z", GAMMA)
    cls = [clause([lit(P, y, z)], {"y": sub, "z": sub})]
    if with_tautology:
        cls.append(
            clause([lit(P, yg, zg), lit(P, yg, zg, positive=False)], {"y": GAMMA, "z": GAMMA})
        )
    sent = sentence_from_clauses(cls, extra_domains=(GAMMA, sub), extra_predicates=(P,))
    return make_instance(sent)
