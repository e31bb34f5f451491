"""From parsed instances to clausal sentences.

``to_clausal`` converts declarations plus formulas into a weighted
instance whose clauses may still carry an inner existential prefix;
``skolemize`` removes those prefixes with fresh predicates, one of which
gets negative weight -1 so counts are preserved exactly;
``drop_redundant`` removes tautological and subsumed clauses without
touching the declared vocabulary.
"""

from __future__ import annotations

from itertools import product

from fomc import frontend as fe
from fomc.logic import (
    Clause,
    Constant,
    Domain,
    Equality,
    Literal,
    PredApp,
    Predicate,
    Sentence,
    Term,
    Variable,
    WfomcInstance,
    clause,
    make_instance,
    sentence_from_clauses,
)

SKOLEM_PREFIX = "@"


class UnsupportedFormulaError(Exception):
    """The formula lies outside the supported quantifier fragment."""


def to_clausal(ast: fe.InstanceAst) -> WfomcInstance:
    """Declarations plus formulas to a clausal weighted instance.

    Universal quantifiers distribute over the clausal structure; at most
    one existential block may remain innermost per clause and is kept as
    the clause's ``exists`` prefix for ``skolemize`` to remove.
    """
    domains: dict[str, Domain] = {}
    sizes: dict[Domain, int] = {}
    for d in ast.domains:
        if d.name in domains:
            raise UnsupportedFormulaError(f"domain {d.name} declared twice")
        domains[d.name] = Domain(d.name)
        if d.size is not None:
            sizes[domains[d.name]] = d.size

    predicates: dict[str, Predicate] = {}
    weights: dict[Predicate, tuple[int, int]] = {}
    for p in ast.predicates:
        if p.name in predicates:
            raise UnsupportedFormulaError(f"predicate {p.name} declared twice")
        for dn in p.arg_domains:
            if dn not in domains:
                raise UnsupportedFormulaError(f"predicate {p.name} uses undeclared domain {dn}")
        pred = Predicate(p.name, len(p.arg_domains), tuple(domains[dn] for dn in p.arg_domains))
        predicates[p.name] = pred
        if p.weights is not None:
            weights[pred] = p.weights

    constants: dict[str, Constant] = {}
    for c in ast.constants:
        if c.domain not in domains:
            raise UnsupportedFormulaError(f"constant {c.name} declared in undeclared domain {c.domain}")
        if c.name in constants:
            raise UnsupportedFormulaError(f"constant {c.name} declared twice")
        constants[c.name] = Constant(c.name, domains[c.domain])

    clauses: list[Clause] = []
    for f in ast.formulas:
        clauses.extend(_formula_clauses(f, domains, predicates, constants))

    sent = sentence_from_clauses(
        clauses,
        constants=constants.values(),
        extra_domains=domains.values(),
        extra_predicates=predicates.values(),
    )
    return make_instance(sent, weights=weights, sizes=sizes)


def _formula_clauses(f, domains, predicates, constants) -> list[Clause]:
    out: list[Clause] = []
    _split_universal(f, {}, domains, predicates, constants, out)
    return out


def _split_universal(f, uvars, domains, predicates, constants, out) -> None:
    if isinstance(f, fe.FAnd):
        _split_universal(f.left, uvars, domains, predicates, constants, out)
        _split_universal(f.right, uvars, domains, predicates, constants, out)
        return
    if isinstance(f, fe.FQuant) and f.kind == "A":
        if f.domain not in domains:
            raise UnsupportedFormulaError(f"undeclared domain {f.domain}")
        new = dict(uvars)
        for v in f.variables:
            new[v] = domains[f.domain]
        _split_universal(f.body, new, domains, predicates, constants, out)
        return

    evars: dict[str, Domain] = {}
    body = f
    while isinstance(body, fe.FQuant) and body.kind == "E":
        if body.domain not in domains:
            raise UnsupportedFormulaError(f"undeclared domain {body.domain}")
        for v in body.variables:
            evars[v] = domains[body.domain]
        body = body.body

    bound = dict(uvars) | evars
    cnf = _to_cnf(body, bound)
    if evars and len(cnf) > 1:
        raise UnsupportedFormulaError(
            "an existential quantifier over a conjunction is not supported"
        )
    for disj in cnf:
        lits = [_make_literal(a, pos, bound, predicates, constants) for a, pos in disj]
        used = {t.name for l in lits for t in _lit_terms(l) if isinstance(t, Variable)}
        binders = {v: d for v, d in uvars.items() if v in used}
        vacuous = {d for v, d in uvars.items() if v not in used}
        exists = [(v, d) for v, d in evars.items() if v in used]
        out.append(clause(lits, binders, exists=exists, vacuous_over=vacuous))


def _lit_terms(l: Literal):
    a = l.atom
    return a.args if isinstance(a, PredApp) else (a.left, a.right)


def _to_cnf(f, bound) -> list[list[tuple]]:
    """Quantifier-free formula to CNF by negation pushing and
    distribution; conjuncts are lists of (atom-ast, polarity) pairs."""

    def nnf(g, pos: bool):
        if isinstance(g, (fe.FAtom, fe.FEq)):
            return [[(g, pos)]] if pos else [[(g, False)]]
        if isinstance(g, fe.FNot):
            return nnf(g.body, not pos)
        if isinstance(g, fe.FImp):
            return nnf(fe.FOr(fe.FNot(g.left), g.right), pos)
        if isinstance(g, fe.FIff):
            both = fe.FAnd(fe.FImp(g.left, g.right), fe.FImp(g.right, g.left))
            return nnf(both, pos)
        if isinstance(g, fe.FAnd):
            l, r = nnf(g.left, pos), nnf(g.right, pos)
            return l + r if pos else _distribute(l, r)
        if isinstance(g, fe.FOr):
            l, r = nnf(g.left, pos), nnf(g.right, pos)
            return _distribute(l, r) if pos else l + r
        if isinstance(g, fe.FQuant):
            raise UnsupportedFormulaError(
                "quantifiers may not be nested inside connectives other than "
                "conjunction at the top level"
            )
        raise UnsupportedFormulaError(f"unsupported formula node {type(g).__name__}")

    return nnf(f, True)


def _distribute(left: list, right: list) -> list:
    return [l + r for l, r in product(left, right)]


def _make_literal(atom_ast, positive, bound, predicates, constants) -> Literal:
    if isinstance(atom_ast, fe.FAtom):
        if atom_ast.pred not in predicates:
            raise UnsupportedFormulaError(f"undeclared predicate {atom_ast.pred}")
        pred = predicates[atom_ast.pred]
        if len(atom_ast.args) != pred.arity:
            raise UnsupportedFormulaError(
                f"predicate {pred.name} expects {pred.arity} arguments, got {len(atom_ast.args)}"
            )
        args = tuple(_make_term(a, bound, constants) for a in atom_ast.args)
        return Literal(PredApp(pred, args), positive)
    return Literal(
        Equality(
            _make_term(atom_ast.left, bound, constants),
            _make_term(atom_ast.right, bound, constants),
        ),
        positive,
    )


def _make_term(name: str, bound, constants) -> Term:
    if name in constants:
        return constants[name]
    if name in bound:
        return Variable(name, bound[name])
    raise UnsupportedFormulaError(f"unbound variable {name}")


# ---------------------------------------------------------------------------
# Skolemization


def skolemize(instance: WfomcInstance) -> WfomcInstance:
    """Remove existential prefixes, preserving the weighted count.

    Each clause ``A xs. E ys. (l1 | ... | lk)`` becomes, with fresh
    predicates ``Z`` and ``S`` over the universal prefix and weights
    ``w(S) = (1, -1)``::

        Z(xs) | l1' ...        (the original clause with the existential
                                part replaced by Z)
        Z(xs) | !li            for every literal li
        S(xs) | Z(xs)
        S(xs) | !li            for every literal li
    """
    sent = instance.sentence
    new_clauses: list[Clause] = []
    new_weights = instance.weight_map
    counter = 1
    for cl in sent.sorted_clauses():
        if not cl.exists:
            new_clauses.append(cl)
            continue
        uvars = cl.binders
        arg_doms = tuple(d for _, d in uvars)
        args = tuple(Variable(v, d) for v, d in uvars)
        Z = Predicate(f"{SKOLEM_PREFIX}Z{counter}", len(args), arg_doms)
        S = Predicate(f"{SKOLEM_PREFIX}S{counter}", len(args), arg_doms)
        counter += 1
        new_weights[S] = (1, -1)
        zlit = Literal(PredApp(Z, args), True)
        slit = Literal(PredApp(S, args), True)
        all_binders = dict(uvars) | dict(cl.exists)
        new_clauses.append(clause([zlit], dict(uvars), vacuous_over=cl.vacuous_over))
        new_clauses.append(clause([slit, zlit], dict(uvars), vacuous_over=cl.vacuous_over))
        universal = {a.name for a in args}
        for lit in cl.literals:
            used = {t.name for t in _lit_terms(lit) if isinstance(t, Variable)}
            binders = {
                v: d for v, d in all_binders.items() if v in used or v in universal
            }
            # existential binders the literal does not mention still
            # quantify it: keep them as vacuity guards so the clause
            # stays inert when such a domain is empty
            vacuous = set(cl.vacuous_over) | {
                d for v, d in cl.exists if v not in used
            }
            new_clauses.append(clause([zlit, lit.negate()], binders, vacuous_over=vacuous))
            new_clauses.append(clause([slit, lit.negate()], binders, vacuous_over=vacuous))
    new_sent = sentence_from_clauses(
        new_clauses,
        constants=sent.constants,
        extra_domains=sent.domains,
        extra_predicates=sent.predicates,
    )
    return make_instance(new_sent, weights=new_weights, sizes=instance.size_map)


# ---------------------------------------------------------------------------
# Redundancy removal


def drop_redundant(sentence: Sentence) -> Sentence:
    """Remove tautologies, false equality literals, and subsumed clauses.

    The declared vocabulary is kept as is, so counts over the declared
    predicates are unchanged.
    """
    kept: list[Clause] = []
    for cl in sentence.sorted_clauses():
        simplified = _simplify_clause(cl)
        if simplified is not None:
            kept.append(simplified)

    result: list[Clause] = []
    for i, cl in enumerate(kept):
        redundant = False
        for j, other in enumerate(kept):
            if i == j:
                continue
            if other == cl and j < i:
                redundant = True
                break
            if other != cl and _subsumes(other, cl):
                # mutual subsumption: keep the first
                if _subsumes(cl, other) and i < j:
                    continue
                redundant = True
                break
        if not redundant:
            result.append(cl)
    return Sentence(
        frozenset(result), sentence.domains, sentence.predicates, sentence.constants
    )


def _simplify_clause(cl: Clause) -> Clause | None:
    """None when the clause is a tautology; otherwise the clause with
    trivially false equality literals removed."""
    lits = []
    for lit in cl.literals:
        a = lit.atom
        if isinstance(a, Equality):
            if a.left == a.right:
                if lit.positive:
                    return None
                continue
            if isinstance(a.left, Constant) and isinstance(a.right, Constant):
                # unique names: distinct constants are unequal
                if lit.positive:
                    continue
                return None
        lits.append(lit)
    for lit in lits:
        if any(lit.complements(o) for o in lits):
            return None
    if len(lits) == len(cl.literals):
        return cl
    used = {t.name for l in lits for t in _lit_terms(l) if isinstance(t, Variable)}
    binders = {v: d for v, d in cl.binders if v in used}
    vacuous = set(cl.vacuous_over) | {d for v, d in cl.binders if v not in used}
    exists = [(v, d) for v, d in cl.exists if v in used]
    return clause(lits, binders, exists=exists, vacuous_over=vacuous)


def _subsumes(general: Clause, specific: Clause) -> bool:
    """True if some domain-respecting variable mapping sends every
    literal of ``general`` into ``specific``."""
    if general.exists or specific.exists:
        return False
    if general.vacuous_over or specific.vacuous_over:
        return False

    def match_terms(pairs, sub):
        sub = dict(sub)
        for g, s in pairs:
            if isinstance(g, Constant):
                if g != s:
                    return None
            else:
                if isinstance(s, Variable):
                    if g.domain != s.domain:
                        return None
                elif isinstance(s, Constant):
                    if g.domain not in s.domain.ancestry():
                        return None
                if g.name in sub:
                    if sub[g.name] != s:
                        return None
                else:
                    sub[g.name] = s
        return sub

    def extend(lits, sub):
        if not lits:
            return True
        first, rest = lits[0], lits[1:]
        for cand in specific.literals:
            if cand.positive is not first.positive:
                continue
            a, b = first.atom, cand.atom
            if isinstance(a, PredApp) and isinstance(b, PredApp) and a.pred == b.pred:
                new = match_terms(zip(a.args, b.args), sub)
            elif isinstance(a, Equality) and isinstance(b, Equality):
                new = match_terms([(a.left, b.left), (a.right, b.right)], sub)
            else:
                continue
            if new is not None and extend(rest, new):
                return True
        return False

    return extend(list(general.literals), {})
