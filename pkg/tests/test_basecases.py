from __future__ import annotations

import math

import pytest

from fomc.algebra import Call, Const, Equation, Program, Var
from fomc.basecases import (
    BaseCaseError,
    compile_with_base_cases,
    find_base_cases,
    propagate,
)
from fomc.evaluator import evaluate
from fomc.logic import (
    Domain,
    Predicate,
    Variable,
    WfomcInstance,
    clause,
    make_instance,
    sentence_from_clauses,
)
from fomc.oracle import brute_force_wfomc

from corpus import (
    DELTA,
    GAMMA,
    bijections_clausal,
    friends_smokers,
    functions_clausal,
    lit,
    skolem_pair_sentence,
)


def sized(instance: WfomcInstance, sizes: dict[str, int]) -> WfomcInstance:
    by_name = {d.name: d for d in instance.sentence.domains}
    pairs = tuple(
        sorted(((by_name[k], v) for k, v in sizes.items()), key=lambda p: p[0].name)
    )
    return WfomcInstance(instance.sentence, instance.weights, pairs)


# ---------------------------------------------------------------------------
# propagate


@pytest.mark.parametrize(
    "builder", [skolem_pair_sentence, functions_clausal, bijections_clausal, friends_smokers]
)
@pytest.mark.parametrize("n", [0, 1, 2])
def test_propagate_preserves_counts(builder, n):
    inst = builder()
    doms = sorted(inst.sentence.domains, key=lambda d: d.name)
    target = doms[0]
    out = propagate(inst, target, n)
    other = {d.name: 2 for d in doms if d != target}
    expected = brute_force_wfomc(sized(inst, other | {target.name: n}))
    got_sizes = other if n == 0 else other | {target.name: n}
    assert brute_force_wfomc(sized(out, got_sizes)) == expected


def test_propagate_zero_removes_domain_and_its_predicates():
    inst = bijections_clausal()
    out = propagate(inst, DELTA, 0)
    assert DELTA not in out.sentence.domains
    assert all(DELTA not in p.arg_domains for p in out.sentence.predicates)


def test_propagate_zero_smooths_lost_predicates():
    # A z in Delta, x in Gamma. P(x) | Q(z): at |Delta| = 0 the clause is
    # vacuous and P must be restored as a tautology
    P = Predicate("P", 1, (GAMMA,))
    Q = Predicate("Q", 1, (DELTA,))
    x, z = Variable("x", GAMMA), Variable("z", DELTA)
    sent = sentence_from_clauses([clause([lit(P, x), lit(Q, z)], {"x": GAMMA, "z": DELTA})])
    inst = make_instance(sent)
    out = propagate(inst, DELTA, 0)
    assert any(
        len(cl.literals) == 2 and cl.literals[0].complements(cl.literals[1])
        for cl in out.sentence.clauses
    )
    unsmoothed = propagate(inst, DELTA, 0, smooth=False)
    assert unsmoothed.sentence.clauses == frozenset()
    for g in range(3):
        assert brute_force_wfomc(sized(out, {"Gamma": g})) == 2**g


def test_propagate_ground_instantiates_constants():
    inst = functions_clausal()
    out = propagate(inst, GAMMA, 2)
    names = {c.name for c in out.sentence.constants}
    assert names == {"@Gamma.1", "@Gamma.2"}
    assert out.size_map[GAMMA] == 2
    # the unit Z clause becomes one unit per constant
    units = [cl for cl in out.sentence.clauses if len(cl.literals) == 1]
    assert len(units) == 2


def test_propagate_rejects_negative_and_existential():
    inst = functions_clausal()
    with pytest.raises(ValueError):
        propagate(inst, GAMMA, -1)
    from corpus import existential_pair_sentence

    with pytest.raises(BaseCaseError):
        propagate(existential_pair_sentence(), GAMMA, 0)


# ---------------------------------------------------------------------------
# find_base_cases


def test_find_base_cases_on_bijections():
    from fomc.compiler import compile_sentence

    prog = compile_sentence(bijections_clausal())
    rec = next(e.fn for e in prog.equations if e.fn != prog.entry)
    assert find_base_cases(prog) == [(rec, 0, 0), (rec, 1, 0)]


def test_find_base_cases_ignores_undecremented_calls():
    prog = Program(
        (
            Equation("f", (Var("m"),), Call("g", (Var("m"),))),
            Equation("g", (Var("n"),), Const(1)),
        ),
        "f",
        {},
        {},
    )
    assert find_base_cases(prog) == []


def test_find_base_cases_rejects_nested_calls():
    prog = Program(
        (Equation("f", (Var("m"),), Call("f", (Call("f", (Var("m"),)),))),),
        "f",
        {},
        {},
    )
    with pytest.raises(BaseCaseError):
        find_base_cases(prog)


# ---------------------------------------------------------------------------
# compile_with_base_cases


def test_bijections_evaluates_to_factorials():
    prog = compile_with_base_cases(bijections_clausal())
    for n in range(8):
        assert evaluate(prog, {"Gamma": n, "Delta": n}) == math.factorial(n)
    assert evaluate(prog, {"Gamma": 3, "Delta": 2}) == 0
    assert evaluate(prog, {"Gamma": 2, "Delta": 3}) == 0


def test_base_case_heads_are_constants():
    prog = compile_with_base_cases(bijections_clausal())
    bases = [e for e in prog.equations if not e.is_definition()]
    assert bases
    for eq in bases:
        assert len(eq.constant_positions()) == 1
        assert all(isinstance(h, (Const, Var)) for h in eq.head)


def test_recursion_depth_is_bounded_by_domain_count():
    for builder in [bijections_clausal, functions_clausal, friends_smokers]:
        inst = builder()
        stats: dict = {}
        compile_with_base_cases(inst, stats=stats)
        assert stats["max_recursion_depth"] <= len(inst.sentence.domains)


def test_smoothing_disabled_reproduces_undercount():
    # P over Gamma x Gamma constrained only on a subdomain once the
    # Delta-quantified clause disappears at |Delta| = 0: smoothing keeps
    # the full region (count 8 at sizes 2/1), disabling it loses the
    # atoms outside the subregion (count 1)
    G = Domain("Gamma")
    GS = Domain("GammaSub", parent=G)
    D = Domain("Delta")
    P = Predicate("P", 2, (G, G))
    Q = Predicate("Q", 1, (D,))
    x, y = Variable("x", G), Variable("y", G)
    u, v = Variable("u", GS), Variable("v", GS)
    z = Variable("z", D)
    sent = sentence_from_clauses(
        [
            clause([lit(P, x, y), lit(Q, z)], {"x": G, "y": G, "z": D}),
            clause([lit(P, u, v)], {"u": GS, "v": GS}),
        ]
    )
    inst = make_instance(sent)
    assert brute_force_wfomc(sized(inst, {"Gamma": 2, "GammaSub": 1, "Delta": 0})) == 8

    results = {}
    for smooth in (True, False):
        p0 = propagate(inst, D, 0, smooth=smooth)
        prog = compile_with_base_cases(p0, smooth=smooth)
        results[smooth] = int(evaluate(prog, {"Gamma": 2, "GammaSub": 1}))
    assert results[True] == 8
    assert results[False] == 1


def test_programs_without_recursion_gain_no_base_cases():
    prog = compile_with_base_cases(functions_clausal())
    assert all(e.is_definition() for e in prog.equations)
