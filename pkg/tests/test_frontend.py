from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from fomc import frontend as fe
from fomc.frontend import (
    FAnd,
    FAtom,
    FEq,
    FIff,
    FImp,
    FNot,
    FOr,
    FQuant,
    ParseError,
    format_formula,
    format_instance,
    parse_formula,
    parse_instance,
)

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


def test_parse_declarations():
    ast = parse_instance((INSTANCES / "skolem_pair_clausal.fo").read_text())
    assert ast.domains == (fe.DomainDecl("Gamma", 1), fe.DomainDecl("Delta", 2))
    assert ast.predicates[0] == fe.PredicateDecl("P", ("Gamma", "Delta"), None)
    assert ast.predicates[2] == fe.PredicateDecl("S", ("Gamma",), (1, -1))
    assert len(ast.formulas) == 4


def test_parse_constant_declaration():
    ast = parse_instance("domain Gamma 2\nconstant a in Gamma\n")
    assert ast.constants == (fe.ConstantDecl("a", "Gamma"),)


def test_empty_file_parses_to_empty_instance():
    ast = parse_instance("# nothing here\n\n")
    assert ast == fe.InstanceAst()


def test_quantifier_scopes_to_end_of_group():
    f = parse_formula("A x in Gamma. P(x) | Q(x)")
    assert isinstance(f, FQuant)
    assert isinstance(f.body, FOr)

    g = parse_formula("(A x in Gamma. P(x)) & Q")
    assert isinstance(g, FAnd)
    assert isinstance(g.left, FQuant)


def test_multi_variable_quantifier():
    f = parse_formula("A y, z in Delta. P(y, z)")
    assert f == FQuant("A", ("y", "z"), "Delta", FAtom("P", ("y", "z")))


def test_operator_precedence_and_associativity():
    f = parse_formula("!P & Q | R -> S <-> T")
    # <-> binds loosest, then ->, then |, then &, then !
    assert f == FIff(
        FImp(FOr(FAnd(FNot(FAtom("P", ())), FAtom("Q", ())), FAtom("R", ())), FAtom("S", ())),
        FAtom("T", ()),
    )
    g = parse_formula("P -> Q -> R")
    assert g == FImp(FAtom("P", ()), FImp(FAtom("Q", ()), FAtom("R", ())))


def test_equality_atom():
    f = parse_formula("A y, z in D. P(y, z) -> y = z")
    assert f.body.right == FEq("y", "z")


def test_predicate_named_like_quantifier_letter():
    # "A(x)" is an atom, "A x in D. ..." is a quantifier
    f = parse_formula("A x in D. A(x)")
    assert f == FQuant("A", ("x",), "D", FAtom("A", ("x",)))


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_formula("P(x,, y)")
    assert "line 1" in str(exc.value)
    with pytest.raises(ParseError):
        parse_formula("A x in gamma. P(x)")  # lower-case domain
    with pytest.raises(ParseError):
        parse_instance("domain Gamma -3")
    with pytest.raises(ParseError):
        parse_formula("P(x) %")


def test_comments_and_blank_lines_ignored():
    ast = parse_instance("# header\ndomain G 1\n\npredicate P(G)  # trailing\n")
    assert len(ast.domains) == 1 and len(ast.predicates) == 1


atoms = st.sampled_from(
    [FAtom("P", ("x",)), FAtom("Q", ("x", "y")), FAtom("R", ()), FEq("x", "y")]
)


def formulas(depth=3):
    if depth == 0:
        return atoms
    sub = formulas(depth - 1)
    return st.one_of(
        atoms,
        st.builds(FNot, sub),
        st.builds(FAnd, sub, sub),
        st.builds(FOr, sub, sub),
        st.builds(FImp, sub, sub),
        st.builds(FIff, sub, sub),
        st.builds(lambda b: FQuant("A", ("x", "y"), "G", b), sub),
        st.builds(lambda b: FQuant("E", ("x", "y"), "G", b), sub),
    )


@given(formulas())
def test_format_parse_round_trip(f):
    assert parse_formula(format_formula(f)) == f


def test_instance_round_trip_on_fixture_files():
    for path in sorted(INSTANCES.glob("*.fo")):
        ast = parse_instance(path.read_text())
        assert parse_instance(format_instance(ast)) == ast


@given(st.text(max_size=60))
def test_parser_never_crashes(text):
    try:
        parse_instance(text)
    except ParseError:
        pass
