"""Base cases for recursive counting programs.

A compiled program may recurse, e.g. ``h(i, a) = i*h(i-1, a-1) + h(i, a-1)``.
Evaluating it needs anchoring equations for the argument values the
recursion bottoms out at.  Those are obtained by *propagating* a fixed
size into the function's sentence (specializing one domain to ``n``
elements) and compiling the specialized sentence, which typically
collapses to a closed form.

``compile_with_base_cases`` ties it together: compile, discover which
``(function, position, value)`` anchors the recursion needs from the
decrements appearing in call arguments, and recursively compile each
propagated sentence, merging everything into one program.
"""

from __future__ import annotations

from itertools import product
from typing import Callable

from fomc.algebra import (
    Add,
    Binom,
    Call,
    Const,
    Equation,
    Expr,
    Indicator,
    Mul,
    Pow,
    Program,
    Sum,
    Var,
)
from fomc.compiler import (
    CompilationFailure,
    _FN_NAMES,
    _fresh_taut,
    _is_partial,
    _mentioned,
    _splice,
    compile_sentence,
)
from fomc.logic import (
    Clause,
    Constant,
    Domain,
    WfomcInstance,
    clause,
    make_instance,
    sentence_from_clauses,
    substitute,
)


class BaseCaseError(Exception):
    pass


# ---------------------------------------------------------------------------
# Propagation: specialize a sentence to a fixed domain size


def propagate(
    instance: WfomcInstance, domain: Domain, n: int, smooth: bool = True
) -> WfomcInstance:
    """The instance specialized to ``|domain| = n``.

    For ``n = 0`` every clause quantifying over the domain (or guarded on
    it being empty) is vacuously true and removed; with ``smooth`` set,
    predicates those clauses alone mentioned are reintroduced as
    tautologies so their atoms stay counted.  For ``n >= 1`` the domain
    is grounded with fresh constants, expanding each clause into one
    instance per assignment of its domain variables.
    """
    if n < 0:
        raise ValueError("domain size must be non-negative")
    sent = instance.sentence
    if any(cl.exists for cl in sent.clauses):
        raise BaseCaseError("propagate expects a Skolemized sentence")
    if n == 0:
        return _propagate_empty(instance, domain, smooth)
    return _propagate_ground(instance, domain, n)


def _propagate_empty(instance: WfomcInstance, domain: Domain, smooth: bool) -> WfomcInstance:
    sent = instance.sentence
    kept: list[Clause] = []
    removed: list[Clause] = []
    for cl in sent.sorted_clauses():
        if domain in cl.vacuous_over or any(d == domain for _, d in cl.binders):
            removed.append(cl)
        else:
            kept.append(cl)
    extra: list[Clause] = []
    if smooth:
        # reintroduce the full region of every predicate a removed clause
        # mentioned; a kept mention may only cover a subregion, and the
        # compiler drops tautologies that turn out to be covered anyway
        still = _mentioned(kept)
        lost: dict = {}
        for rc in removed:
            guards = rc.vacuous_over - {domain}
            for lit in rc.pred_literals():
                p = lit.atom.pred
                if domain in p.arg_domains:
                    continue  # region empty at size zero
                lost.setdefault(p, []).append((_is_partial(lit), bool(guards)))
        for p in sorted(lost, key=lambda q: q.name):
            if any(not partial and not guarded for partial, guarded in lost[p]):
                extra.append(_fresh_taut(p))
            elif p not in still:
                raise BaseCaseError(
                    f"cannot smooth the loss of {p.name} at |{domain.name}| = 0"
                )
    preds = {p for p in sent.predicates if domain not in p.arg_domains}
    doms = {d for d in sent.domains if d != domain}
    consts = {c for c in sent.constants if c.domain != domain}
    new_sent = sentence_from_clauses(
        kept + extra, constants=consts, extra_domains=doms, extra_predicates=preds
    )
    weights = {p: w for p, w in instance.weight_map.items() if domain not in p.arg_domains}
    sizes = {d: s for d, s in instance.size_map.items() if d != domain}
    return make_instance(new_sent, weights, sizes)


def _propagate_ground(instance: WfomcInstance, domain: Domain, n: int) -> WfomcInstance:
    sent = instance.sentence
    consts = tuple(Constant(f"@{domain.name}.{j}", domain) for j in range(1, n + 1))
    out: list[Clause] = []
    for cl in sent.sorted_clauses():
        vac = cl.vacuous_over - {domain}
        dvars = [v for v, d in cl.binders if d == domain]
        for combo in product(consts, repeat=len(dvars)):
            inst = substitute(cl, dict(zip(dvars, combo)))
            out.append(clause(inst.literals, inst.binder_map, vacuous_over=vac))
    new_sent = sentence_from_clauses(
        out,
        constants=set(sent.constants) | set(consts),
        extra_domains=sent.domains,
        extra_predicates=sent.predicates,
    )
    sizes = dict(instance.size_map)
    sizes[domain] = n
    return make_instance(new_sent, instance.weight_map, sizes)


# ---------------------------------------------------------------------------
# Which base cases does a program need?


def _walk_calls(e: Expr):
    if isinstance(e, Call):
        yield e
        for a in e.args:
            yield from _walk_calls(a)
    elif isinstance(e, Add):
        for t in e.terms:
            yield from _walk_calls(t)
    elif isinstance(e, Mul):
        for f in e.factors:
            yield from _walk_calls(f)
    elif isinstance(e, Pow):
        yield from _walk_calls(e.base)
        yield from _walk_calls(e.exp)
    elif isinstance(e, Binom):
        yield from _walk_calls(e.n)
        yield from _walk_calls(e.k)
    elif isinstance(e, Indicator):
        yield from _walk_calls(e.subject)
    elif isinstance(e, Sum):
        yield from _walk_calls(e.lo)
        yield from _walk_calls(e.hi)
        yield from _walk_calls(e.body)


def _decrement(arg: Expr) -> int:
    """How far below its variable part a call argument can reach: the
    magnitude of the negative constant offset in ``x - c`` shapes."""
    if any(True for _ in _walk_calls(arg)):
        raise BaseCaseError(
            "a function application inside a call argument defeats base-case analysis"
        )
    if isinstance(arg, Add):
        for t in arg.terms:
            if isinstance(t, Const) and t.value < 0:
                return -t.value
    return 0


def find_base_cases(program: Program) -> list[tuple[str, int, int]]:
    """``(function, parameter position, value)`` anchors the program's
    recursions need, derived from the decrements in call arguments."""
    defined = {e.fn for e in program.equations}
    needs: dict[tuple[str, int], int] = {}
    for eq in program.equations:
        for call in _walk_calls(eq.body):
            if call.fn not in defined:
                raise BaseCaseError(f"call to undefined function {call.fn}")
            for i, arg in enumerate(call.args):
                c = _decrement(arg)
                key = (call.fn, i)
                needs[key] = max(needs.get(key, 0), c)
    out = []
    for (fn, i), c in sorted(needs.items()):
        out.extend((fn, i, v) for v in range(c))
    return out


# ---------------------------------------------------------------------------
# The driver


def compile_with_base_cases(
    instance: WfomcInstance,
    mode: str = "bfs",
    max_nongreedy: int = 5,
    trace: Callable[[str], None] | None = None,
    smooth: bool = True,
    stats: dict | None = None,
) -> Program:
    """Compile and close the result under the base cases it needs.

    ``stats`` (when given) records ``max_recursion_depth``, the deepest
    nesting of propagate-and-recompile steps; each step eliminates a
    domain, so it is bounded by the number of domains.  ``smooth=False``
    disables tautology reintroduction during propagation (deliberately
    unsound; kept for demonstrating why smoothing is needed).
    """
    if stats is None:
        stats = {}
    program = _compile_closed(instance, mode, max_nongreedy, trace, smooth, stats, 0)
    return _splice(program).simplified()


def _compile_closed(instance, mode, max_nongreedy, trace, smooth, stats, depth) -> Program:
    stats["max_recursion_depth"] = max(stats.get("max_recursion_depth", 0), depth)
    program = compile_sentence(instance, mode=mode, max_nongreedy=max_nongreedy, trace=trace)
    for _ in range(200):
        missing = [
            need for need in find_base_cases(program) if not _covered(program, need)
        ]
        if not missing:
            return program
        for need in missing:
            program = _add_base_case(
                program, need, mode, max_nongreedy, trace, smooth, stats, depth
            )
    raise BaseCaseError("base-case closure did not settle")


def _covered(program: Program, need: tuple[str, int, int]) -> bool:
    fn, pos, val = need
    return any(
        eq.fn == fn and isinstance(eq.head[pos], Const) and eq.head[pos].value == val
        for eq in program.equations
    )


def _fn_name_stream():
    yield from _FN_NAMES
    i = len(_FN_NAMES)
    while True:
        i += 1
        yield f"f{i}"


def _rename_calls(e: Expr, mapping: dict[str, str]) -> Expr:
    if isinstance(e, Call):
        return Call(mapping.get(e.fn, e.fn), tuple(_rename_calls(a, mapping) for a in e.args))
    if isinstance(e, Add):
        return Add(tuple(_rename_calls(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(_rename_calls(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_rename_calls(e.base, mapping), _rename_calls(e.exp, mapping))
    if isinstance(e, Binom):
        return Binom(_rename_calls(e.n, mapping), _rename_calls(e.k, mapping))
    if isinstance(e, Indicator):
        return Indicator(e.low, _rename_calls(e.subject, mapping), e.high)
    if isinstance(e, Sum):
        return Sum(
            e.index,
            _rename_calls(e.lo, mapping),
            _rename_calls(e.hi, mapping),
            _rename_calls(e.body, mapping),
        )
    return e


def _add_base_case(program, need, mode, max_nongreedy, trace, smooth, stats, depth) -> Program:
    fn, pos, val = need
    defn = program.definitions().get(fn)
    if defn is None:
        raise BaseCaseError(f"no definition for {fn}")
    if fn not in program.fsentences:
        raise BaseCaseError(f"no sentence recorded for {fn}")
    dom = program.fdomains[fn][pos]
    if trace is not None:
        trace(f"base case {fn} at |{dom.name}| = {val}")
    sub_inst = propagate(program.fsentences[fn], dom, val, smooth=smooth)
    sub = _compile_closed(sub_inst, mode, max_nongreedy, trace, smooth, stats, depth + 1)

    used = {e.fn for e in program.equations}
    names = _fn_name_stream()
    ren: dict[str, str] = {}
    for eq in sub.equations:
        if eq.fn in ren:
            continue
        name = next(n for n in names if n not in used)
        ren[eq.fn] = name
        used.add(name)

    new_eqs = tuple(
        Equation(ren[eq.fn], eq.head, _rename_calls(eq.body, ren)) for eq in sub.equations
    )
    params = dict(zip(program.fdomains[fn], defn.head))
    args = []
    for d in sub.fdomains[sub.entry]:
        if d == dom:
            args.append(Const(val))
        elif d in params:
            args.append(params[d])
        else:
            raise BaseCaseError(
                f"domain {d.name} of the specialized sentence is not a parameter of {fn}"
            )
    head = list(defn.head)
    head[pos] = Const(val)
    base_eq = Equation(fn, tuple(head), Call(ren[sub.entry], tuple(args)))

    fsent = dict(program.fsentences)
    fdom = dict(program.fdomains)
    for old, new in ren.items():
        if old in sub.fsentences:
            fsent[new] = sub.fsentences[old]
            fdom[new] = sub.fdomains[old]
    return Program(
        program.equations + new_eqs + (base_eq,), program.entry, fsent, fdom
    )
