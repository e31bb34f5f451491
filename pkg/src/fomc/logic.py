"""Core types for many-sorted, function-free clausal first-order logic.

Everything here is immutable.  A :class:`Clause` is a disjunction of
literals whose free variables are universally quantified by ``binders``;
an optional ``exists`` prefix marks variables that are existentially
quantified *inside* the universal prefix (these survive only until
Skolemization).  Positive equality literals double as disequality
constraints on the clause: ``C or y = z`` is exactly ``y != z -> C``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union


@dataclass(frozen=True)
class Domain:
    """A named sort.  ``parent`` links subdomains introduced by splitting."""

    name: str
    parent: "Domain | None" = None

    def ancestry(self) -> tuple["Domain", ...]:
        """This domain followed by its chain of parents, root last."""
        chain = [self]
        while chain[-1].parent is not None:
            chain.append(chain[-1].parent)
        return tuple(chain)

    def root(self) -> "Domain":
        return self.ancestry()[-1]

    def __repr__(self) -> str:
        return f"Domain({self.name})"


@dataclass(frozen=True)
class Variable:
    name: str
    domain: Domain

    def __repr__(self) -> str:
        return f"{self.name}:{self.domain.name}"


@dataclass(frozen=True)
class Constant:
    name: str
    domain: Domain

    def __repr__(self) -> str:
        return f"{self.name}@{self.domain.name}"


Term = Union[Variable, Constant]


@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int
    arg_domains: tuple[Domain, ...]

    def __post_init__(self) -> None:
        if len(self.arg_domains) != self.arity:
            raise ValueError(
                f"predicate {self.name}/{self.arity} declared with "
                f"{len(self.arg_domains)} argument domains"
            )

    def __repr__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class PredApp:
    pred: Predicate
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.args) != self.pred.arity:
            raise ValueError(f"{self.pred!r} applied to {len(self.args)} arguments")


@dataclass(frozen=True)
class Equality:
    left: Term
    right: Term


Atom = Union[PredApp, Equality]


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def complements(self, other: "Literal") -> bool:
        return self.atom == other.atom and self.positive is not other.positive


def _term_key(t: Term) -> tuple:
    if isinstance(t, Variable):
        return (0, t.name, t.domain.name)
    return (1, t.name, t.domain.name)


def literal_key(lit: Literal) -> tuple:
    """Deterministic ordering key; predicate literals before equalities."""
    a = lit.atom
    if isinstance(a, PredApp):
        return (0, a.pred.name, a.pred.arity, tuple(map(_term_key, a.args)), not lit.positive)
    return (1, _term_key(a.left), _term_key(a.right), not lit.positive)


@dataclass(frozen=True)
class Clause:
    """A universally quantified disjunction of literals.

    ``binders`` maps variable names to their domains (the universal
    prefix); ``exists`` is an inner existential prefix used only before
    Skolemization.  ``vacuous_over`` records domains whose binders no
    longer occur in any literal: the clause then also holds whenever one
    of those domains is empty.  Use :func:`clause` to construct.
    """

    literals: tuple[Literal, ...]
    binders: tuple[tuple[str, Domain], ...]
    exists: tuple[tuple[str, Domain], ...] = ()
    vacuous_over: frozenset[Domain] = frozenset()

    @property
    def binder_map(self) -> dict[str, Domain]:
        return dict(self.binders)

    def variables(self) -> frozenset[Variable]:
        out = set()
        for lit in self.literals:
            for t in _atom_terms(lit.atom):
                if isinstance(t, Variable):
                    out.add(t)
        return frozenset(out)

    def pred_literals(self) -> tuple[Literal, ...]:
        return tuple(l for l in self.literals if isinstance(l.atom, PredApp))

    def eq_literals(self) -> tuple[Literal, ...]:
        return tuple(l for l in self.literals if isinstance(l.atom, Equality))

    def predicates(self) -> frozenset[Predicate]:
        return frozenset(
            l.atom.pred for l in self.literals if isinstance(l.atom, PredApp)
        )

    def __repr__(self) -> str:
        parts = []
        for lit in self.literals:
            a = lit.atom
            if isinstance(a, PredApp):
                s = f"{a.pred.name}({', '.join(t.name for t in a.args)})"
            else:
                s = f"{a.left.name} = {a.right.name}"
            parts.append(s if lit.positive else "!" + s)
        q = ", ".join(f"{v} in {d.name}" for v, d in self.binders)
        e = ", ".join(f"{v} in {d.name}" for v, d in self.exists)
        head = f"A {q}. " if q else ""
        if e:
            head += f"E {e}. "
        return head + (" | ".join(parts) or "[]")


def _atom_terms(atom: Atom) -> tuple[Term, ...]:
    if isinstance(atom, PredApp):
        return atom.args
    return (atom.left, atom.right)


def clause(
    literals: Iterable[Literal],
    binders: Mapping[str, Domain] | Iterable[tuple[str, Domain]],
    exists: Iterable[tuple[str, Domain]] = (),
    vacuous_over: Iterable[Domain] = (),
) -> Clause:
    """Canonical clause constructor: sorts and deduplicates literals,
    sorts the universal binders by variable name."""
    lits = tuple(sorted(set(literals), key=literal_key))
    if isinstance(binders, Mapping):
        binders = binders.items()
    bnd = tuple(sorted(binders, key=lambda p: p[0]))
    if len({v for v, _ in bnd}) != len(bnd):
        raise ValueError("duplicate binder variable")
    return Clause(lits, bnd, tuple(exists), frozenset(vacuous_over))


@dataclass(frozen=True)
class Sentence:
    """A conjunction of clauses plus its declared vocabulary."""

    clauses: frozenset[Clause]
    domains: frozenset[Domain]
    predicates: frozenset[Predicate]
    constants: frozenset[Constant] = frozenset()

    def sorted_clauses(self) -> tuple[Clause, ...]:
        return tuple(sorted(self.clauses, key=lambda c: (tuple(map(literal_key, c.literals)), c.binders)))

    def sorted_domains(self) -> tuple[Domain, ...]:
        return tuple(sorted(self.domains, key=lambda d: d.name))

    def sorted_predicates(self) -> tuple[Predicate, ...]:
        return tuple(sorted(self.predicates, key=lambda p: (p.name, p.arity)))


def sentence_from_clauses(
    clauses: Iterable[Clause],
    constants: Iterable[Constant] = (),
    extra_domains: Iterable[Domain] = (),
    extra_predicates: Iterable[Predicate] = (),
) -> Sentence:
    """Build a sentence whose declarations are derived from mentions."""
    cls = frozenset(clauses)
    preds = set(extra_predicates)
    doms = set(extra_domains)
    consts = set(constants)
    for c in cls:
        for lit in c.literals:
            if isinstance(lit.atom, PredApp):
                preds.add(lit.atom.pred)
            for t in _atom_terms(lit.atom):
                if isinstance(t, Constant):
                    consts.add(t)
        for _, d in c.binders:
            doms.add(d)
        for _, d in c.exists:
            doms.add(d)
        doms.update(c.vacuous_over)
    for p in preds:
        doms.update(p.arg_domains)
    for cst in consts:
        doms.add(cst.domain)
    return Sentence(cls, frozenset(doms), frozenset(preds), frozenset(consts))


@dataclass(frozen=True)
class WfomcInstance:
    """A sentence together with predicate weights and domain sizes.

    Unlisted predicates weigh ``(1, 1)``; unlisted domain sizes are left
    symbolic (the CLI supplies them).  Weights are integers so that
    Skolemization's ``-1`` trick stays exact.
    """

    sentence: Sentence
    weights: tuple[tuple[Predicate, tuple[int, int]], ...] = ()
    sizes: tuple[tuple[Domain, int], ...] = ()

    @property
    def weight_map(self) -> dict[Predicate, tuple[int, int]]:
        return dict(self.weights)

    @property
    def size_map(self) -> dict[Domain, int]:
        return dict(self.sizes)

    def weight(self, pred: Predicate) -> tuple[int, int]:
        return self.weight_map.get(pred, (1, 1))

    def with_weights(self, weights: Mapping[Predicate, tuple[int, int]]) -> "WfomcInstance":
        merged = self.weight_map | dict(weights)
        return WfomcInstance(self.sentence, tuple(sorted(merged.items(), key=lambda p: p[0].name)), self.sizes)


def make_instance(
    sentence: Sentence,
    weights: Mapping[Predicate, tuple[int, int]] | None = None,
    sizes: Mapping[Domain, int] | None = None,
) -> WfomcInstance:
    w = tuple(sorted((weights or {}).items(), key=lambda p: (p[0].name, p[0].arity)))
    s = tuple(sorted((sizes or {}).items(), key=lambda p: p[0].name))
    return WfomcInstance(sentence, w, s)


def substitute(cl: Clause, mapping: Mapping[str, Term]) -> Clause:
    """Replace variables by terms; substituted binders are removed.

    Purely syntactic: equalities between identical or distinct constants
    are kept verbatim (simplifying them is the redundancy pass's job).
    """

    def sub_term(t: Term) -> Term:
        if isinstance(t, Variable) and t.name in mapping:
            return mapping[t.name]
        return t

    def sub_atom(a: Atom) -> Atom:
        if isinstance(a, PredApp):
            return PredApp(a.pred, tuple(sub_term(t) for t in a.args))
        return Equality(sub_term(a.left), sub_term(a.right))

    lits = [Literal(sub_atom(l.atom), l.positive) for l in cl.literals]
    binders = [(v, d) for v, d in cl.binders if v not in mapping]
    exists = tuple((v, d) for v, d in cl.exists if v not in mapping)
    return clause(lits, binders, exists, cl.vacuous_over)


def doms(item: Literal | Clause) -> frozenset[Domain]:
    """Domains of the variables occurring in a literal or clause."""
    if isinstance(item, Literal):
        return frozenset(
            t.domain for t in _atom_terms(item.atom) if isinstance(t, Variable)
        )
    out: set[Domain] = set()
    for lit in item.literals:
        out |= doms(lit)
    return frozenset(out)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    clause: Clause | None = None

    def __str__(self) -> str:
        if self.clause is not None:
            return f"{self.message} (in clause: {self.clause!r})"
        return self.message


def _domain_compatible(var_dom: Domain, declared: Domain) -> bool:
    return declared in var_dom.ancestry()


def validate(sentence: Sentence) -> list[Diagnostic]:
    """Well-formedness diagnostics; never raises.

    Checks declarations, arities, argument sorts (a subdomain may stand
    where an ancestor is declared), equality sort agreement, and binder
    hygiene.
    """
    out: list[Diagnostic] = []
    by_name: dict[str, set[int]] = {}
    for p in sentence.predicates:
        by_name.setdefault(p.name, set()).add(p.arity)
    for name, arities in sorted(by_name.items()):
        if len(arities) > 1:
            out.append(Diagnostic(f"predicate {name} declared with multiple arities {sorted(arities)}"))
    for p in sentence.sorted_predicates():
        for d in p.arg_domains:
            if d not in sentence.domains:
                out.append(Diagnostic(f"predicate {p.name} uses undeclared domain {d.name}"))
    for c in sorted(sentence.constants, key=lambda k: k.name):
        if c.domain not in sentence.domains:
            out.append(Diagnostic(f"constant {c.name} declared in undeclared domain {c.domain.name}"))

    for cl_ in sentence.sorted_clauses():
        bound = cl_.binder_map | dict(cl_.exists)
        used: set[str] = set()
        for lit in cl_.literals:
            atom = lit.atom
            if isinstance(atom, PredApp):
                if atom.pred not in sentence.predicates:
                    out.append(Diagnostic(f"undeclared predicate {atom.pred.name}/{atom.pred.arity}", cl_))
                for i, (t, d) in enumerate(zip(atom.args, atom.pred.arg_domains)):
                    if isinstance(t, Variable):
                        if t.name not in bound:
                            out.append(Diagnostic(f"unbound variable {t.name}", cl_))
                        elif bound[t.name] != t.domain:
                            out.append(Diagnostic(f"variable {t.name} used at domain {t.domain.name} but bound in {bound[t.name].name}", cl_))
                        if not _domain_compatible(t.domain, d):
                            out.append(Diagnostic(
                                f"argument {i + 1} of {atom.pred.name} expects {d.name}, got {t.domain.name}", cl_))
                    else:
                        if t not in sentence.constants:
                            out.append(Diagnostic(f"undeclared constant {t.name}", cl_))
                        if not _domain_compatible(t.domain, d):
                            out.append(Diagnostic(
                                f"argument {i + 1} of {atom.pred.name} expects {d.name}, got constant in {t.domain.name}", cl_))
            else:
                l, r = atom.left, atom.right
                if l.domain.root() != r.domain.root():
                    out.append(Diagnostic(f"equality between different sorts {l.domain.name} and {r.domain.name}", cl_))
                for t in (l, r):
                    if isinstance(t, Variable) and t.name not in bound:
                        out.append(Diagnostic(f"unbound variable {t.name}", cl_))
            for t in _atom_terms(atom):
                if isinstance(t, Variable):
                    used.add(t.name)
        for v, _ in cl_.binders:
            if v not in used:
                out.append(Diagnostic(f"unused binder {v}", cl_))
        for v, _ in cl_.exists:
            if v not in used:
                out.append(Diagnostic(f"unused existential binder {v}", cl_))
    return out
