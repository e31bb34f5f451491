"""Compilation of clausal sentences into recursive counting equations.

The compiler maintains a working set of clauses plus predicate weights
and repeatedly applies *greedy* rules that never lose optimality:
equality normalization, re-typing predicates to the domains they are
actually used at, splitting domains that coexist with a subdomain or a
constant, tautology and empty-clause elimination, unit propagation, case
splits on nullary predicates, and decomposition into independent
components.  Whenever a clause disappears, any predicate region it alone
mentioned is reintroduced as a tautology so the structure count over the
mentioned atoms is preserved (smoothing).

When no greedy rule applies, one of three *non-greedy* rules is chosen:

* atom counting over a unary predicate (a binomial sum over how many
  elements satisfy it),
* independent partial grounding over a domain whose elements do not
  interact (a power), or
* domain recursion, singling out one fresh element of a domain.

``bfs`` mode finds a derivation minimizing the total number of
non-greedy applications via iterative deepening with backtracking;
``greedy`` mode always takes the first applicable candidate.  Sentences
already compiled are recognized up to renaming of domains and
predicates, which is what produces recursive self-references.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product
from typing import Callable, Iterable

from fomc.algebra import (
    Binom,
    Call,
    Const,
    Equation,
    Expr,
    Indicator,
    Mul,
    ONE,
    Pow,
    Program,
    Sum,
    Var,
    ZERO,
    expr_key,
    mul,
    simplify,
    sub,
    subst,
)
from fomc.logic import (
    Clause,
    Constant,
    Domain,
    Equality,
    Literal,
    PredApp,
    Predicate,
    Variable,
    WfomcInstance,
    clause,
    literal_key,
    make_instance,
    sentence_from_clauses,
    substitute,
)

_FN_NAMES = ["f", "g", "h", "p", "q", "r"]
_PARAM_NAMES = ["m", "n", "l", "k", "j", "i", "a", "b", "c", "d", "e", "s", "t", "u", "v", "w"]

_GREEDY_CAP = 64
_CLOSURE_CAP = 2000

Weights = dict[Predicate, tuple[int, int]]


class CompilationFailure(Exception):
    def __init__(self, message: str, clauses: Iterable[Clause] = ()):  # noqa: D401
        cls = sorted(clauses, key=lambda c: tuple(map(literal_key, c.literals)))
        if cls:
            message += "; stuck sentence:\n  " + "\n  ".join(repr(c) for c in cls)
        super().__init__(message)
        self.clauses = tuple(cls)


class _BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class Candidate:
    """A non-greedy rule application candidate."""

    kind: str  # "atom-counting" | "partial-grounding" | "domain-recursion"
    pred: Predicate | None
    domain: Domain

    def describe(self) -> str:
        if self.pred is not None:
            return f"{self.kind} on {self.pred.name} over {self.domain.name}"
        return f"{self.kind} over {self.domain.name}"


# ---------------------------------------------------------------------------
# Small clause helpers


def _pred_lits(cl: Clause) -> tuple[Literal, ...]:
    return cl.pred_literals()


def _mentioned(clauses: Iterable[Clause]) -> set[Predicate]:
    out: set[Predicate] = set()
    for cl in clauses:
        out |= cl.predicates()
    return out


def _is_partial(lit: Literal) -> bool:
    """A literal with a repeated variable mentions only part of its
    predicate's region (for instance just the diagonal)."""
    names = [t.name for t in lit.atom.args if isinstance(t, Variable)]
    return len(names) != len(set(names))


def _partial_preds(clauses: Iterable[Clause]) -> set[Predicate]:
    return {
        l.atom.pred for cl in clauses for l in _pred_lits(cl) if _is_partial(l)
    }


def _occurring_domains(clauses: Iterable[Clause]) -> set[Domain]:
    out: set[Domain] = set()
    for cl in clauses:
        for _, d in cl.binders:
            out.add(d)
        out |= cl.vacuous_over
        for l in _pred_lits(cl):
            out.update(l.atom.pred.arg_domains)
    return out


def _sorted_clauses(clauses: Iterable[Clause]) -> list[Clause]:
    return sorted(
        clauses,
        key=lambda c: (
            tuple(map(literal_key, c.literals)),
            tuple((v, d.name) for v, d in c.binders),
            tuple(sorted(d.name for d in c.vacuous_over)),
        ),
    )


def _rebind(lits: list[Literal], cl: Clause, extra_vacuous: Iterable[Domain] = ()) -> Clause:
    """Rebuild a clause after literal removal: binders whose variable no
    longer occurs become vacuity guards."""
    used = {
        t.name
        for l in lits
        for t in (l.atom.args if isinstance(l.atom, PredApp) else (l.atom.left, l.atom.right))
        if isinstance(t, Variable)
    }
    binders = {v: d for v, d in cl.binders if v in used}
    vacuous = set(cl.vacuous_over) | set(extra_vacuous) | {
        d for v, d in cl.binders if v not in used
    }
    return clause(lits, binders, vacuous_over=vacuous)


def _fresh_taut(pred: Predicate) -> Clause:
    vs = [Variable(f"t{i + 1}", d) for i, d in enumerate(pred.arg_domains)]
    atom = PredApp(pred, tuple(vs))
    return clause(
        [Literal(atom, True), Literal(atom, False)],
        {v.name: v.domain for v in vs},
    )


def _smooth_removals(
    removed: Iterable[Clause],
    remaining: Iterable[Clause],
    excluded: set[Predicate],
) -> list[Clause]:
    """Tautologies restoring predicate regions lost with ``removed``."""
    still = _mentioned(remaining)
    lost: dict[Predicate, list[tuple[bool, bool]]] = {}
    for rc in removed:
        for lit in _pred_lits(rc):
            p = lit.atom.pred
            if p in excluded or p in still:
                continue
            lost.setdefault(p, []).append((_is_partial(lit), bool(rc.vacuous_over)))
    out = []
    for p in sorted(lost, key=lambda q: q.name):
        if not any(not partial and not guarded for partial, guarded in lost[p]):
            raise CompilationFailure(
                f"cannot smooth the loss of {p.name}: only partial or "
                "conditional mentions were removed",
                removed,
            )
        out.append(_fresh_taut(p))
    return out


def _condition(
    clauses: set[Clause], pred: Predicate, value: bool, excluded: set[Predicate]
) -> set[Clause]:
    """Set every atom of ``pred`` to ``value``, smoothing removed clauses."""
    removed, kept = [], []
    for cl in _sorted_clauses(clauses):
        mine = [l for l in cl.literals if isinstance(l.atom, PredApp) and l.atom.pred == pred]
        if not mine:
            kept.append(cl)
        elif any(l.positive is value for l in mine):
            removed.append(cl)
        else:
            rest = [l for l in cl.literals if l not in mine]
            kept.append(_rebind(rest, cl))
    kept.extend(_smooth_removals(removed, kept, excluded | {pred}))
    return set(kept)


# ---------------------------------------------------------------------------
# Re-typing and domain splitting


def _join_domains(doms: list[Domain]) -> Domain | None:
    first = doms[0]
    for cand in first.ancestry():
        if all(cand in d.ancestry() for d in doms):
            return cand
    return None


def _term_domain(t) -> Domain:
    return t.domain


def _retype_predicates(clauses: set[Clause], weights: Weights) -> set[Clause] | None:
    """Narrow (or widen) each predicate's argument domains to the join of
    the domains it is actually applied at.  Returns None when stable."""
    usage: dict[Predicate, list[list[Domain]]] = {}
    for cl in clauses:
        for lit in _pred_lits(cl):
            slots = usage.setdefault(lit.atom.pred, [[] for _ in range(lit.atom.pred.arity)])
            for i, t in enumerate(lit.atom.args):
                slots[i].append(_term_domain(t))
    mapping: dict[Predicate, Predicate] = {}
    for p, slots in usage.items():
        new_doms = []
        for i, occ in enumerate(slots):
            j = _join_domains(occ)
            if j is None:
                raise CompilationFailure(
                    f"incompatible domains at argument {i + 1} of {p.name}", clauses
                )
            new_doms.append(j)
        if tuple(new_doms) != p.arg_domains:
            mapping[p] = Predicate(p.name, p.arity, tuple(new_doms))
    if not mapping:
        return None
    out = set()
    for cl in clauses:
        lits = []
        for lit in cl.literals:
            if isinstance(lit.atom, PredApp) and lit.atom.pred in mapping:
                lits.append(Literal(PredApp(mapping[lit.atom.pred], lit.atom.args), lit.positive))
            else:
                lits.append(lit)
        out.add(clause(lits, cl.binder_map, vacuous_over=cl.vacuous_over))
    for old, new in mapping.items():
        if old in weights:
            weights[new] = weights.pop(old)
    return out


def _split_positions(pred: Predicate, target: Domain) -> tuple[int, ...]:
    return tuple(i for i, d in enumerate(pred.arg_domains) if d == target)


def _pattern_pred(
    pred: Predicate,
    pattern: tuple[int, ...],
    target: Domain,
    cells: tuple[Domain, ...],
    drop: int | None,
    cache: dict,
) -> Predicate:
    """The re-sorted predicate for one cell pattern; positions assigned
    the cell index ``drop`` are removed (used for singled-out constants)."""
    key = (pred, pattern)
    if key in cache:
        return cache[key]
    positions = _split_positions(pred, target)
    name = pred.name + "|" + "".join(str(c) for c in pattern)
    doms = []
    for i, d in enumerate(pred.arg_domains):
        if i in positions:
            c = pattern[positions.index(i)]
            if c == drop:
                continue
            doms.append(cells[c])
        else:
            doms.append(d)
    cache[key] = Predicate(name, len(doms), tuple(doms))
    return cache[key]


def _resort(
    clauses: set[Clause],
    weights: Weights,
    target: Domain,
    cells: tuple[Domain, ...],
    const: Constant | None,
    nonempty: bool,
) -> set[Clause]:
    """Split ``target`` into ``cells``; when ``const`` is given, cell 0
    is the singleton holding it (its argument positions are dropped).

    Every clause variable over ``target`` is enumerated over the cells,
    predicates are re-sorted per cell pattern, and tautologies are added
    for any pattern that ends up unmentioned so no region silently
    disappears.  ``nonempty`` drops vacuity guards over ``target``
    (justified when the split itself asserts an element exists).
    """
    drop = 0 if const is not None else None
    pred_cache: dict = {}

    preds_with_positions = {
        p for p in _mentioned(clauses) if _split_positions(p, target)
    }

    def map_term(t, mapping):
        if isinstance(t, Variable):
            return mapping.get(t.name, t)
        if t.domain == target:
            if const is not None and t.name == const.name:
                return const
            # any other constant of the split domain lives in the rest cell
            return Constant(t.name, cells[-1])
        return t

    def cell_of(t) -> int:
        d = _term_domain(t)
        for i, c in enumerate(cells):
            if d == c or (const is not None and i == 0 and isinstance(t, Constant) and t == const):
                return i
        raise CompilationFailure(f"term {t!r} not in any cell of {target.name}", clauses)

    out: list[Clause] = []
    for cl in _sorted_clauses(clauses):
        vacuous = set(cl.vacuous_over)
        if target in vacuous:
            if nonempty:
                vacuous.discard(target)
            else:
                raise CompilationFailure(
                    f"cannot split {target.name}: a clause is guarded on it being empty",
                    clauses,
                )
        dvars = [v for v, d in cl.binders if d == target]
        choices: list[tuple] = []
        for combo in product(range(len(cells)), repeat=len(dvars)):
            mapping = {}
            for v, ci in zip(dvars, combo):
                if const is not None and ci == 0:
                    mapping[v] = const
                else:
                    mapping[v] = Variable(v, cells[ci])
            lits = []
            for lit in cl.literals:
                a = lit.atom
                if isinstance(a, Equality):
                    lits.append(Literal(Equality(map_term(a.left, mapping), map_term(a.right, mapping)), lit.positive))
                    continue
                args = tuple(map_term(t, mapping) for t in a.args)
                positions = _split_positions(a.pred, target)
                if positions:
                    pattern = tuple(cell_of(args[i]) for i in positions)
                    newp = _pattern_pred(a.pred, pattern, target, cells, drop, pred_cache)
                    newargs = tuple(t for i, t in enumerate(args) if not (i in positions and pattern[positions.index(i)] == drop))
                    lits.append(Literal(PredApp(newp, newargs), lit.positive))
                else:
                    lits.append(Literal(PredApp(a.pred, args), lit.positive))
            binders = {v: d for v, d in cl.binders if d != target}
            for v, ci in zip(dvars, combo):
                if not (const is not None and ci == 0):
                    binders[v] = cells[ci]
            used = {
                t.name
                for l in lits
                for t in (l.atom.args if isinstance(l.atom, PredApp) else (l.atom.left, l.atom.right))
                if isinstance(t, Variable)
            }
            vac = set(vacuous) | {d for v, d in binders.items() if v not in used}
            out.append(clause(lits, {v: d for v, d in binders.items() if v in used}, vacuous_over=vac))

    # weights transfer to every cell pattern; tautologies restore the
    # regions of patterns that ended up unmentioned
    original = {p: weights[p] for p in preds_with_positions if p in weights}
    for pred in preds_with_positions:
        weights.pop(pred, None)
    mentioned_after = _mentioned(out)
    for pred in sorted(preds_with_positions, key=lambda p: p.name):
        positions = _split_positions(pred, target)
        for pattern in product(range(len(cells)), repeat=len(positions)):
            newp = _pattern_pred(pred, pattern, target, cells, drop, pred_cache)
            if pred in original:
                weights[newp] = original[pred]
            if newp not in mentioned_after:
                out.append(_fresh_taut(newp))
    return set(out)


# ---------------------------------------------------------------------------
# Canonical forms (isomorphism up to renaming of domains and predicates)


def canonical_form(
    clauses: Iterable[Clause], weights: Weights
) -> tuple[tuple, tuple[Domain, ...]]:
    """A hashable key identical for sentences equal up to renaming, plus
    this sentence's domains in canonical position order."""
    clauses = list(clauses)
    doms = sorted(_occurring_domains(clauses), key=lambda d: d.name)
    preds = sorted(_mentioned(clauses), key=lambda p: (p.name, p.arity))

    best: tuple | None = None
    best_doms: tuple[Domain, ...] = tuple(doms)
    for dperm in permutations(range(len(doms))):
        dom_label = {doms[i]: dperm[i] for i in range(len(doms))}
        sig = {
            p: (p.arity, weights.get(p, (1, 1)), tuple(sorted(dom_label[d] for d in p.arg_domains)))
            for p in preds
        }
        classes: dict[tuple, list[Predicate]] = {}
        for p in preds:
            classes.setdefault(sig[p], []).append(p)
        class_keys = sorted(classes)
        perm_sets = [permutations(classes[k]) for k in class_keys]
        for combo in product(*perm_sets):
            pred_label: dict[Predicate, int] = {}
            i = 0
            for members in combo:
                for p in members:
                    pred_label[p] = i
                    i += 1
            enc = _encode_sentence(clauses, weights, dom_label, pred_label)
            if best is None or enc < best:
                best = enc
                inv = sorted(dom_label, key=lambda d: dom_label[d])
                best_doms = tuple(inv)
    return best or ((), ()), best_doms


def _encode_sentence(clauses, weights, dom_label, pred_label) -> tuple:
    encs = sorted(_encode_clause(cl, dom_label, pred_label) for cl in clauses)
    wenc = tuple(
        sorted((pred_label[p], weights.get(p, (1, 1))) for p in pred_label)
    )
    return (tuple(encs), wenc)


def _encode_clause(cl: Clause, dom_label, pred_label) -> tuple:
    names = sorted({v for v, _ in cl.binders})
    best = None
    for perm in permutations(names):
        var_ix = {v: i for i, v in enumerate(perm)}

        def term_enc(t):
            if isinstance(t, Variable):
                return (0, var_ix[t.name], dom_label[t.domain])
            return (1, t.name, t.domain.name)

        lits = []
        for lit in cl.literals:
            a = lit.atom
            if isinstance(a, PredApp):
                lits.append((0, pred_label[a.pred], lit.positive, tuple(term_enc(t) for t in a.args)))
            else:
                ends = sorted([term_enc(a.left), term_enc(a.right)])
                lits.append((1, lit.positive, tuple(ends)))
        binders = tuple(sorted((var_ix[v], dom_label[d]) for v, d in cl.binders))
        guards = tuple(sorted(dom_label[d] for d in cl.vacuous_over))
        enc = (tuple(sorted(lits)), binders, guards)
        if best is None or enc < best:
            best = enc
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# The compiler context


@dataclass
class _Fn:
    params: tuple[str, ...]
    domains: tuple[Domain, ...]


class _Ctx:
    def __init__(self, mode: str, budget: int, trace: Callable[[str], None] | None):
        self.mode = mode
        self.budget = budget
        self.trace = trace
        self.cache: dict = {}
        self.functions: dict[str, _Fn] = {}
        self.equations: list[Equation] = []
        self.fsentences: dict[str, WfomcInstance] = {}
        self.fdomains: dict[str, tuple[Domain, ...]] = {}
        self.fn_counter = 0
        self.param_counter = 0
        self.dom_counter = 0

    def new_fn(self) -> str:
        i = self.fn_counter
        self.fn_counter += 1
        return _FN_NAMES[i] if i < len(_FN_NAMES) else f"f{i + 1}"

    def new_param(self) -> str:
        i = self.param_counter
        self.param_counter += 1
        return _PARAM_NAMES[i] if i < len(_PARAM_NAMES) else f"x{i + 1}"

    def new_dom(self, base: str) -> str:
        self.dom_counter += 1
        return f"{base}#{self.dom_counter}"

    def log(self, message: str) -> None:
        if self.trace is not None:
            self.trace(message)

    def snapshot(self):
        return (
            dict(self.cache),
            dict(self.functions),
            list(self.equations),
            dict(self.fsentences),
            dict(self.fdomains),
            self.fn_counter,
            self.param_counter,
            self.dom_counter,
            self.budget,
        )

    def restore(self, snap) -> None:
        (
            self.cache,
            self.functions,
            self.equations,
            self.fsentences,
            self.fdomains,
            self.fn_counter,
            self.param_counter,
            self.dom_counter,
            self.budget,
        ) = (dict(snap[0]), dict(snap[1]), list(snap[2]), dict(snap[3]), dict(snap[4]), snap[5], snap[6], snap[7], snap[8])


# ---------------------------------------------------------------------------
# Greedy closure


def _closure(
    clauses: set[Clause], weights: Weights, env: dict[Domain, Expr], ctx: _Ctx
) -> tuple[list[Expr], set[Clause], Weights]:
    factors: list[Expr] = []
    for _ in range(_CLOSURE_CAP):
        step = _closure_step(clauses, weights, env, ctx, factors)
        if step is None:
            return factors, clauses, weights
        clauses = step
    raise CompilationFailure("greedy closure did not terminate", clauses)


def _closure_step(clauses, weights, env, ctx, factors) -> set[Clause] | None:
    out = _equality_step(clauses)
    if out is not None:
        return out
    out = _retype_predicates(clauses, weights)
    if out is not None:
        return out
    out = _constant_step(clauses, weights, env, ctx)
    if out is not None:
        return out
    out = _alignment_step(clauses, weights, env, ctx)
    if out is not None:
        return out
    out = _tautology_step(clauses, weights, env, factors)
    if out is not None:
        return out
    out = _empty_clause_step(clauses, env, factors)
    if out is not None:
        return out
    out = _unit_step(clauses, weights, env, ctx, factors)
    if out is not None:
        return out
    return None


def _related(d1: Domain, d2: Domain) -> bool:
    return d2 in d1.ancestry()[1:] or d1 in d2.ancestry()[1:]


def _equality_step(clauses: set[Clause]) -> set[Clause] | None:
    for cl in _sorted_clauses(clauses):
        for lit in cl.eq_literals():
            a = lit.atom
            l, r = a.left, a.right
            if lit.positive:
                if l == r or (
                    isinstance(l, Constant) and isinstance(r, Constant) and l.name == r.name
                ):
                    rest = clauses - {cl}
                    tauts = _smooth_removals([cl], rest, set())
                    return rest | set(tauts)
                if isinstance(l, Constant) and isinstance(r, Constant):
                    return (clauses - {cl}) | {_rebind([x for x in cl.literals if x != lit], cl)}
                ld, rd = _term_domain(l), _term_domain(r)
                if ld != rd and not _related(ld, rd):
                    return (clauses - {cl}) | {_rebind([x for x in cl.literals if x != lit], cl)}
                # same or ancestry-related domains: keep as a constraint
                # (alignment will separate related domains)
            else:
                if l == r:
                    return (clauses - {cl}) | {_rebind([x for x in cl.literals if x != lit], cl)}
                ld, rd = _term_domain(l), _term_domain(r)
                if (isinstance(l, Constant) and isinstance(r, Constant)) or (
                    ld != rd and not _related(ld, rd)
                ):
                    # distinct constants, or disjoint domains: the
                    # disequality always holds, so the clause is true
                    rest = clauses - {cl}
                    tauts = _smooth_removals([cl], rest, set())
                    return rest | set(tauts)
                # substitute: keep the more specific term
                if isinstance(l, Constant) or (isinstance(r, Variable) and ld in rd.ancestry()[1:]):
                    keep, gone = l, r
                elif isinstance(r, Constant) or rd in ld.ancestry()[1:]:
                    keep, gone = r, l
                else:
                    keep, gone = sorted((l, r), key=lambda t: t.name)
                rest = [x for x in cl.literals if x != lit]
                new = substitute(
                    clause(rest, cl.binder_map, vacuous_over=cl.vacuous_over),
                    {gone.name: keep},
                )
                return (clauses - {cl}) | {new}
    return None


def _clause_constants(cl: Clause):
    for lit in cl.literals:
        a = lit.atom
        terms = a.args if isinstance(a, PredApp) else (a.left, a.right)
        for t in terms:
            if isinstance(t, Constant):
                yield t


def _constant_step(clauses, weights, env, ctx) -> set[Clause] | None:
    for cl in _sorted_clauses(clauses):
        for t in sorted(_clause_constants(cl), key=lambda c: (c.domain.name, c.name)):
            if t.domain not in env:
                continue  # already a singled-out singleton
            return _isolate_constant(clauses, weights, env, ctx, t.domain, t.name)
    return None


def _isolate_constant(clauses, weights, env, ctx, target: Domain, cname: str) -> set[Clause]:
    singleton = Domain(ctx.new_dom(f"{target.name}.{cname}"))
    rest = Domain(ctx.new_dom(f"{target.name}-{cname}"), parent=target)
    const = Constant(cname, singleton)
    env[rest] = simplify(sub(env[target], ONE))
    ctx.log(f"singling out {cname} from {target.name}")
    return _resort(clauses, weights, target, (singleton, rest), const, nonempty=True)


def _alignment_step(clauses, weights, env, ctx) -> set[Clause] | None:
    occurring = sorted(_occurring_domains(clauses), key=lambda d: d.name)
    present = set(occurring)
    for d1 in occurring:
        for anc in d1.ancestry()[1:]:
            if anc in present:
                if anc not in env:
                    raise CompilationFailure(f"no size for domain {anc.name}", clauses)
                rest = Domain(ctx.new_dom(f"{anc.name}-{d1.name}"), parent=anc)
                env[rest] = simplify(sub(env[anc], env[d1]))
                ctx.log(f"splitting {anc.name} into {d1.name} and its complement")
                return _resort(clauses, weights, anc, (d1, rest), None, nonempty=False)
    return None


def _guard_factors(cl: Clause, env) -> list[Expr]:
    return [Indicator(1, env[d], None) for d in sorted(cl.vacuous_over, key=lambda d: d.name)]


def _tautology_step(clauses, weights, env, factors) -> set[Clause] | None:
    for cl in _sorted_clauses(clauses):
        comp = None
        for l in cl.literals:
            if isinstance(l.atom, PredApp) and any(l.complements(o) for o in cl.literals):
                comp = l
                break
        if comp is None:
            continue
        rest = clauses - {cl}
        pure = len(cl.literals) == 2 and not cl.eq_literals()
        if not pure:
            return rest | set(_smooth_removals([cl], rest, set()))
        pred = comp.atom.pred
        others = [
            lit for c2 in rest for lit in _pred_lits(c2) if lit.atom.pred == pred
        ]
        if others:
            if _is_partial(comp) or all(_is_partial(o) for o in others):
                raise CompilationFailure(
                    f"cannot reconcile partial mentions of {pred.name}", clauses
                )
            return rest
        if _is_partial(comp):
            raise CompilationFailure(
                f"cannot count the region of a partial tautology on {pred.name}", clauses
            )
        wp, wn = weights.get(pred, (1, 1))
        exponent = mul(*[env[d] for _, d in cl.binders], *_guard_factors(cl, env))
        factors.append(simplify(Pow(Const(wp + wn), exponent)))
        weights.pop(pred, None)
        return rest
    return None


def _chromatic(n_vars: int, edges: set[tuple[str, str]], names: list[str]) -> int:
    for colors in range(1, n_vars + 1):
        for assignment in product(range(colors), repeat=n_vars):
            coloring = dict(zip(names, assignment))
            if all(coloring[a] != coloring[b] for a, b in edges):
                return colors
    return n_vars


def _empty_clause_step(clauses, env, factors) -> set[Clause] | None:
    for cl in _sorted_clauses(clauses):
        if _pred_lits(cl):
            continue
        # only equality literals (all positive constraints) remain: the
        # clause is violated exactly when some binding falsifies all of
        # them, which needs each domain to seat its disequality clique
        conditions: list[Expr] = list(_guard_factors(cl, env))
        by_dom: dict[Domain, list[str]] = {}
        for v, d in cl.binders:
            by_dom.setdefault(d, []).append(v)
        edges: dict[Domain, set[tuple[str, str]]] = {d: set() for d in by_dom}
        ok = True
        for lit in cl.eq_literals():
            a = lit.atom
            if not (
                lit.positive
                and isinstance(a.left, Variable)
                and isinstance(a.right, Variable)
                and a.left.domain == a.right.domain
            ):
                ok = False
                break
            edges[a.left.domain].add(tuple(sorted((a.left.name, a.right.name))))
        if not ok:
            continue  # wait for normalization or alignment to resolve it
        for d in sorted(by_dom, key=lambda d_: d_.name):
            names = sorted(by_dom[d])
            chi = _chromatic(len(names), edges[d], names)
            if d not in env:
                raise CompilationFailure(f"no size for domain {d.name}", clauses)
            conditions.append(Indicator(chi, env[d], None))
        if not conditions:
            factor: Expr = ZERO
        elif len(conditions) == 1 and conditions[0].high is None:
            # complement of a single lower bound is a window, which sum
            # expansion can later unroll
            factor = Indicator(0, conditions[0].subject, (conditions[0].low or 1) - 1)
        else:
            factor = sub(ONE, mul(*conditions))
        factors.append(simplify(factor))
        return clauses - {cl}
    return None


def _unit_step(clauses, weights, env, ctx, factors) -> set[Clause] | None:
    partial = _partial_preds(clauses)
    for cl in _sorted_clauses(clauses):
        lits = _pred_lits(cl)
        if len(lits) != 1 or cl.eq_literals() or cl.vacuous_over:
            continue
        lit = lits[0]
        pred = lit.atom.pred
        if pred in partial:
            continue
        if not all(isinstance(t, Variable) for t in lit.atom.args):
            continue
        wp, wn = weights.get(pred, (1, 1))
        w = wp if lit.positive else wn
        exponent = mul(*[env[d] for d in pred.arg_domains])
        factors.append(simplify(Pow(Const(w), exponent)))
        ctx.log(f"unit propagating {'' if lit.positive else 'not '}{pred.name}")
        out = _condition(clauses, pred, lit.positive, set())
        weights.pop(pred, None)
        return out
    return None


# ---------------------------------------------------------------------------
# Non-greedy rules


def applicable_rules(clauses: set[Clause], weights: Weights) -> list[Candidate]:
    """Non-greedy candidates in deterministic preference order."""
    partial = _partial_preds(clauses)
    mentioned = sorted(_mentioned(clauses), key=lambda p: p.name)
    occurring = sorted(
        {d for cl in clauses for _, d in cl.binders}, key=lambda d: d.name
    )
    guards = {d for cl in clauses for d in cl.vacuous_over}
    out: list[Candidate] = []
    for p in mentioned:
        if p.arity == 1 and p not in partial and p.arg_domains[0] not in guards:
            out.append(Candidate("atom-counting", p, p.arg_domains[0]))
    for d in occurring:
        if d in guards:
            continue
        if _ipg_applicable(clauses, d):
            out.append(Candidate("partial-grounding", None, d))
    unary_doms = {p.arg_domains[0] for p in mentioned if p.arity == 1}
    for d in occurring:
        if d in unary_doms:
            # prefer atom counting while a unary predicate lives on d
            continue
        out.append(Candidate("domain-recursion", None, d))
    return out


def _ipg_applicable(clauses: set[Clause], d: Domain) -> bool:
    for cl in clauses:
        dvars = {v for v, dd in cl.binders if dd == d}
        if len(dvars) != 1:
            return False
        (x,) = dvars
        for lit in _pred_lits(cl):
            names = {t.name for t in lit.atom.args if isinstance(t, Variable)}
            if x not in names:
                return False
        for lit in cl.eq_literals():
            names = {
                t.name for t in (lit.atom.left, lit.atom.right) if isinstance(t, Variable)
            }
            if x in names:
                return False
    return True


def _rule_atom_counting(cand: Candidate, clauses, weights, env, ctx) -> Expr:
    pred = cand.pred
    dom = cand.domain
    idx = ctx.new_param()
    cell_t = Domain(ctx.new_dom(f"{dom.name}+{pred.name}"))
    cell_f = Domain(ctx.new_dom(f"{dom.name}-{pred.name}"))
    w2 = dict(weights)
    split = _resort(set(clauses), w2, dom, (cell_t, cell_f), None, nonempty=False)
    pt = Predicate(pred.name + "|0", 1, (cell_t,))
    pf = Predicate(pred.name + "|1", 1, (cell_f,))
    excluded = {pt, pf}
    split = _condition(split, pt, True, excluded)
    split = _condition(split, pf, False, excluded)
    w2.pop(pt, None)
    w2.pop(pf, None)
    env2 = dict(env)
    env2[cell_t] = Var(idx)
    env2[cell_f] = simplify(sub(env[dom], Var(idx)))
    wp, wn = weights.get(pred, (1, 1))
    child = _count(split, w2, env2, ctx)
    body = simplify(
        Mul((
            Binom(env[dom], Var(idx)),
            Pow(Const(wp), Var(idx)),
            Pow(Const(wn), sub(env[dom], Var(idx))),
            child,
        ))
    )
    return Sum(idx, ZERO, env[dom], body)


def _rule_partial_grounding(cand: Candidate, clauses, weights, env, ctx) -> Expr:
    dom = cand.domain
    pred_map: dict[Predicate, Predicate] = {}
    out = set()
    for cl in _sorted_clauses(clauses):
        lits = []
        for lit in cl.literals:
            a = lit.atom
            if isinstance(a, Equality):
                lits.append(lit)
                continue
            positions = _split_positions(a.pred, dom)
            if a.pred not in pred_map:
                if positions:
                    doms = tuple(d for i, d in enumerate(a.pred.arg_domains) if i not in positions)
                    pred_map[a.pred] = Predicate(a.pred.name + "|e", len(doms), doms)
                else:
                    pred_map[a.pred] = a.pred
            args = tuple(t for i, t in enumerate(a.args) if i not in positions)
            lits.append(Literal(PredApp(pred_map[a.pred], args), lit.positive))
        binders = {v: d for v, d in cl.binders if d != dom}
        out.add(clause(lits, binders, vacuous_over=cl.vacuous_over))
    w2 = {pred_map.get(p, p): w for p, w in weights.items()}
    child = _count(out, w2, dict(env), ctx)
    return simplify(Pow(child, env[dom]))


def _rule_domain_recursion(cand: Candidate, clauses, weights, env, ctx) -> Expr:
    dom = cand.domain
    w2 = dict(weights)
    env2 = dict(env)
    cname = f"@{dom.name}"
    split = _isolate_constant(set(clauses), w2, env2, ctx, dom, cname)
    return _count(split, w2, env2, ctx)


_RULES = {
    "atom-counting": _rule_atom_counting,
    "partial-grounding": _rule_partial_grounding,
    "domain-recursion": _rule_domain_recursion,
}


def _nongreedy(clauses, weights, env, ctx) -> Expr:
    cands = applicable_rules(clauses, weights)
    if not cands:
        raise CompilationFailure("no rule applies", clauses)
    if ctx.budget <= 0:
        if ctx.mode == "bfs":
            raise _BudgetExhausted()
        raise CompilationFailure("greedy non-greedy cap exceeded", clauses)
    if ctx.mode == "greedy":
        cand = cands[0]
        ctx.budget -= 1
        ctx.log(f"applying {cand.describe()}")
        return _RULES[cand.kind](cand, clauses, weights, env, ctx)
    budget_hit = False
    last: CompilationFailure | None = None
    for cand in cands:
        snap = ctx.snapshot()
        ctx.budget -= 1
        try:
            ctx.log(f"trying {cand.describe()}")
            return _RULES[cand.kind](cand, clauses, weights, env, ctx)
        except _BudgetExhausted:
            budget_hit = True
            ctx.restore(snap)
        except CompilationFailure as e:
            last = e
            ctx.restore(snap)
    if budget_hit:
        raise _BudgetExhausted()
    raise last if last is not None else CompilationFailure("no rule applies", clauses)


# ---------------------------------------------------------------------------
# The driver


def _components(clauses: set[Clause]) -> list[set[Clause]]:
    remaining = _sorted_clauses(clauses)
    comps: list[set[Clause]] = []
    while remaining:
        seed = remaining.pop(0)
        comp = {seed}
        preds = set(seed.predicates())
        changed = True
        while changed:
            changed = False
            for cl in list(remaining):
                if cl.predicates() & preds:
                    comp.add(cl)
                    preds |= cl.predicates()
                    remaining.remove(cl)
                    changed = True
        comps.append(comp)
    return comps


def _count(clauses: set[Clause], weights: Weights, env: dict[Domain, Expr], ctx: _Ctx) -> Expr:
    weights = dict(weights)
    env = dict(env)
    factors, clauses, weights = _closure(set(clauses), weights, env, ctx)

    nullary = sorted((p for p in _mentioned(clauses) if p.arity == 0), key=lambda p: p.name)
    if nullary:
        pred = nullary[0]
        wp, wn = weights.get(pred, (1, 1))
        w2 = dict(weights)
        w2.pop(pred, None)
        ctx.log(f"case splitting on {pred.name}")
        t_clauses = _condition(clauses, pred, True, set())
        f_clauses = _condition(clauses, pred, False, set())
        branch = _add2(
            mul(Const(wp), _count(t_clauses, w2, env, ctx)),
            mul(Const(wn), _count(f_clauses, w2, env, ctx)),
        )
        return simplify(Mul(tuple(factors + [branch])))

    if not clauses:
        return simplify(Mul(tuple(factors))) if factors else ONE

    comps = _components(clauses)
    if len(comps) > 1:
        parts = []
        for comp in comps:
            wc = {p: w for p, w in weights.items() if p in _mentioned(comp)}
            parts.append(_count(comp, wc, env, ctx))
        return simplify(Mul(tuple(factors + parts)))

    key, dom_order = canonical_form(clauses, weights)
    if key in ctx.cache:
        fn = ctx.cache[key]
        ctx.log(f"cache hit: {fn}")
        args = tuple(env[d] for d in dom_order)
        return simplify(Mul(tuple(factors + [Call(fn, args)])))

    fn = ctx.new_fn()
    params = tuple(ctx.new_param() for _ in dom_order)
    ctx.cache[key] = fn
    ctx.functions[fn] = _Fn(params, dom_order)
    wmention = {p: w for p, w in weights.items() if p in _mentioned(clauses)}
    ctx.fsentences[fn] = make_instance(sentence_from_clauses(clauses), weights=wmention)
    ctx.fdomains[fn] = dom_order
    inner_env = {d: Var(p) for d, p in zip(dom_order, params)}
    body = _nongreedy(clauses, weights, inner_env, ctx)
    ctx.equations.append(Equation(fn, tuple(Var(p) for p in params), simplify(body)))
    args = tuple(env[d] for d in dom_order)
    return simplify(Mul(tuple(factors + [Call(fn, args)])))


def _add2(a: Expr, b: Expr) -> Expr:
    from fomc.algebra import Add

    return simplify(Add((a, b)))


def compile_sentence(
    instance: WfomcInstance,
    mode: str = "bfs",
    max_nongreedy: int = 5,
    trace: Callable[[str], None] | None = None,
) -> Program:
    """Compile a clausal weighted instance into recursive equations.

    ``bfs`` (the default) minimizes the total number of non-greedy rule
    applications by iterative deepening up to ``max_nongreedy``;
    ``greedy`` commits to the first applicable candidate at every step.
    """
    sent = instance.sentence
    for cl in sent.clauses:
        if cl.exists:
            raise CompilationFailure("existential quantifiers must be Skolemized away first")

    if mode not in ("bfs", "greedy"):
        raise ValueError(f"unknown mode {mode!r}")
    budgets = range(max_nongreedy + 1) if mode == "bfs" else [_GREEDY_CAP]

    last_failure: CompilationFailure | None = None
    for budget in budgets:
        ctx = _Ctx(mode, budget, trace)
        try:
            return _compile_once(instance, ctx)
        except _BudgetExhausted:
            continue
        except CompilationFailure as e:
            if mode == "greedy":
                raise
            last_failure = e
            continue
    if last_failure is not None:
        raise last_failure
    raise CompilationFailure(
        f"no compilation found within {max_nongreedy} non-greedy applications"
    )


def _compile_once(instance: WfomcInstance, ctx: _Ctx) -> Program:
    sent = instance.sentence
    weights = instance.weight_map
    entry = ctx.new_fn()
    doms = sent.sorted_domains()
    params = tuple(ctx.new_param() for _ in doms)
    env: dict[Domain, Expr] = {d: Var(p) for d, p in zip(doms, params)}
    ctx.functions[entry] = _Fn(params, doms)
    ctx.fsentences[entry] = instance
    ctx.fdomains[entry] = doms

    factors: list[Expr] = []
    mentioned = _mentioned(sent.clauses)
    for p in sent.sorted_predicates():
        if p not in mentioned:
            # declared but never used: every structure over its atoms
            wp, wn = weights.get(p, (1, 1))
            factors.append(simplify(Pow(Const(wp + wn), mul(*[env[d] for d in p.arg_domains]))))

    body = _count(set(sent.clauses), weights, env, ctx)
    body = simplify(Mul(tuple(factors + [body])))
    ctx.equations.insert(0, Equation(entry, tuple(Var(p) for p in params), body))

    program = Program(tuple(ctx.equations), entry, dict(ctx.fsentences), dict(ctx.fdomains))
    program = program.simplified()
    program = _splice(program)
    program = _inline(program)
    return program.simplified()


# ---------------------------------------------------------------------------
# Post-passes: splice pure-call bodies, inline closed-form functions


def _calls_in(e: Expr) -> set[str]:
    out: set[str] = set()

    def walk(x: Expr) -> None:
        if isinstance(x, Call):
            out.add(x.fn)
        for child in _children(x):
            walk(child)

    walk(e)
    return out


def _children(e: Expr) -> tuple[Expr, ...]:
    from fomc.algebra import Add

    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Pow):
        return (e.base, e.exp)
    if isinstance(e, Binom):
        return (e.n, e.k)
    if isinstance(e, Indicator):
        return (e.subject,)
    if isinstance(e, Sum):
        return (e.lo, e.hi, e.body)
    if isinstance(e, Call):
        return e.args
    return ()


def _expr_size(e: Expr) -> int:
    return 1 + sum(_expr_size(c) for c in _children(e))


def _replace_calls(e: Expr, fn: str, params: tuple[str, ...], body: Expr) -> Expr:
    from fomc.algebra import Add

    if isinstance(e, Call):
        args = tuple(_replace_calls(a, fn, params, body) for a in e.args)
        if e.fn == fn:
            return subst(body, dict(zip(params, args)))
        return Call(e.fn, args)
    if isinstance(e, Add):
        return Add(tuple(_replace_calls(t, fn, params, body) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(_replace_calls(f, fn, params, body) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_replace_calls(e.base, fn, params, body), _replace_calls(e.exp, fn, params, body))
    if isinstance(e, Binom):
        return Binom(_replace_calls(e.n, fn, params, body), _replace_calls(e.k, fn, params, body))
    if isinstance(e, Indicator):
        return Indicator(e.low, _replace_calls(e.subject, fn, params, body), e.high)
    if isinstance(e, Sum):
        return Sum(e.index, _replace_calls(e.lo, fn, params, body), _replace_calls(e.hi, fn, params, body), _replace_calls(e.body, fn, params, body))
    return e


def _drop_unreferenced(program: Program) -> Program:
    referenced = {program.entry}
    changed = True
    eq_by_fn: dict[str, list[Equation]] = {}
    for eq in program.equations:
        eq_by_fn.setdefault(eq.fn, []).append(eq)
    while changed:
        changed = False
        for fn in list(referenced):
            for eq in eq_by_fn.get(fn, []):
                for callee in _calls_in(eq.body):
                    if callee not in referenced:
                        referenced.add(callee)
                        changed = True
    eqs = tuple(eq for eq in program.equations if eq.fn in referenced)
    fs = {fn: inst for fn, inst in program.fsentences.items() if fn in referenced}
    fd = {fn: doms for fn, doms in program.fdomains.items() if fn in referenced}
    return Program(eqs, program.entry, fs, fd)


def _splice(program: Program) -> Program:
    """Replace a body that is exactly a call with the callee's body, so
    chains created by intermediate cache entries collapse into single
    recursive equations."""
    eqs = list(program.equations)
    changed = True
    while changed:
        changed = False
        defs = {e.fn: e for e in eqs if e.is_definition()}
        for i, eq in enumerate(eqs):
            body = eq.body
            if not isinstance(body, Call) or body.fn == eq.fn or body.fn not in defs:
                continue
            callee = defs[body.fn]
            if callee.fn == eq.fn:
                continue
            params = tuple(h.name for h in callee.head)  # type: ignore[union-attr]
            eqs[i] = Equation(eq.fn, eq.head, simplify(subst(callee.body, dict(zip(params, body.args)))))
            changed = True
            break
    return _drop_unreferenced(Program(tuple(eqs), program.entry, program.fsentences, program.fdomains))


def _inline(program: Program) -> Program:
    """Inline call-free non-entry definitions into their call sites."""
    eqs = list(program.equations)
    changed = True
    while changed:
        changed = False
        defs = {e.fn: e for e in eqs if e.is_definition()}
        for fn, eq in sorted(defs.items()):
            if fn == program.entry:
                continue
            if _calls_in(eq.body):
                continue
            if _expr_size(eq.body) > 40:
                continue
            if sum(1 for e in eqs if e.fn == fn) != 1:
                continue  # functions with base cases stay put
            params = tuple(h.name for h in eq.head)  # type: ignore[union-attr]
            for i, other in enumerate(eqs):
                if other.fn == fn:
                    continue
                new_body = _replace_calls(other.body, fn, params, eq.body)
                if new_body != other.body:
                    eqs[i] = Equation(other.fn, other.head, simplify(new_body))
                    changed = True
            if changed:
                break
    return _drop_unreferenced(Program(tuple(eqs), program.entry, program.fsentences, program.fdomains))
