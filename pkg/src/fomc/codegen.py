"""Translation of a completed program into standalone C++ source.

Each function gets its own memo cache and follows the same three-step
body: cache lookup, base-case dispatch (redirecting to a separate
function per base case), then evaluation of the defining expression.
Arithmetic is arbitrary-precision via the runtime header shipped in
``runtime/include/counter_runtime.hpp``; products containing function
calls short-circuit on zero so that guard factors protect recursive
calls exactly like the interpreter does.

Emission is a pure function of the program: byte-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

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
    expr_key,
    free_vars,
)
from fomc.basecases import find_base_cases
from fomc.logic import Domain

RUNTIME_VERSION = 1


class EmissionError(Exception):
    pass


@dataclass(frozen=True)
class EmittedProgram:
    source_text: str
    entry_arity: int
    argument_order: tuple[Domain, ...]


def _contains_call(e: Expr) -> bool:
    if isinstance(e, Call):
        return True
    if isinstance(e, Add):
        return any(_contains_call(t) for t in e.terms)
    if isinstance(e, Mul):
        return any(_contains_call(f) for f in e.factors)
    if isinstance(e, Pow):
        return _contains_call(e.base) or _contains_call(e.exp)
    if isinstance(e, Binom):
        return _contains_call(e.n) or _contains_call(e.k)
    if isinstance(e, Indicator):
        return _contains_call(e.subject)
    if isinstance(e, Sum):
        return any(_contains_call(x) for x in (e.lo, e.hi, e.body))
    return False


def _cxx(e: Expr) -> str:
    if isinstance(e, Const):
        return f"rt::Int({e.value})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        return "(" + " + ".join(_cxx(t) for t in e.terms) + ")"
    if isinstance(e, Mul):
        if _contains_call(e):
            # evaluate factors left to right, stopping at zero, so guard
            # factors protect the calls that follow them
            lines = ["[&] { rt::Int acc_ = 1;"]
            for f in e.factors:
                lines.append(f" acc_ *= {_cxx(f)}; if (acc_ == 0) return acc_;")
            lines.append(" return acc_; }()")
            return "".join(lines)
        return "(" + " * ".join(_cxx(f) for f in e.factors) + ")"
    if isinstance(e, Pow):
        return f"rt::pow({_cxx(e.base)}, {_cxx(e.exp)})"
    if isinstance(e, Binom):
        return f"rt::binom({_cxx(e.n)}, {_cxx(e.k)})"
    if isinstance(e, Indicator):
        lo = "true" if e.low is None else f"{_cxx(e.subject)} >= {e.low}"
        hi = "true" if e.high is None else f"{_cxx(e.subject)} <= {e.high}"
        return f"rt::Int({lo} && {hi} ? 1 : 0)"
    if isinstance(e, Sum):
        j = e.index
        return (
            f"[&] {{ rt::Int sum_{j} = 0; const rt::Int hi_{j} = {_cxx(e.hi)}; "
            f"for (rt::Int {j} = {_cxx(e.lo)}; {j} <= hi_{j}; ++{j}) "
            f"{{ sum_{j} += {_cxx(e.body)}; }} return sum_{j}; }}()"
        )
    if isinstance(e, Call):
        return f"{e.fn}(" + ", ".join(_cxx(a) for a in e.args) + ")"
    raise EmissionError(f"cannot emit {e!r}")


def _variant_name(eq: Equation) -> str:
    parts = [f"{i}_{h.value}" for i, h in enumerate(eq.head) if isinstance(h, Const)]
    return eq.fn + "_b" + "_".join(parts)


def _signature(name: str, params: list[str]) -> str:
    args = ", ".join(f"const rt::Int &{p}" for p in params)
    return f"rt::Int {name}({args})"


def emit_program(program: Program) -> EmittedProgram:
    """Byte-deterministic C++ source computing the program's entry count.

    Refuses programs whose recursions are missing base cases: the
    emitted code has no interpreter to fail gracefully at run time.
    """
    defs = program.definitions()
    covered = {
        (eq.fn, pos, eq.head[pos].value)
        for eq in program.equations
        for pos in eq.constant_positions()
    }
    for need in find_base_cases(program):
        if need not in covered:
            fn, pos, val = need
            raise EmissionError(
                f"incomplete program: {fn} has no base case for argument "
                f"{pos + 1} = {val}"
            )
    if program.entry not in defs:
        raise EmissionError("entry function has no definition")

    by_fn: dict[str, list[Equation]] = {}
    for eq in program.equations:
        by_fn.setdefault(eq.fn, []).append(eq)
    fn_order = sorted(by_fn, key=lambda fn: (fn == program.entry, fn))

    for fn, eqs in by_fn.items():
        if sum(1 for e in eqs if e.is_definition()) != 1:
            raise EmissionError(f"{fn} must have exactly one defining equation")

    lines: list[str] = []
    out = lines.append
    out("// generated counting program; do not edit")
    out('#include "counter_runtime.hpp"')
    out("")
    out(f"static_assert(FOMC_RUNTIME_VERSION == {RUNTIME_VERSION},")
    out('              "regenerate this file against the current runtime");')
    out("")
    out("namespace {")
    out("")

    # caches and forward declarations
    for fn in fn_order:
        defn = defs[fn]
        out(f"rt::Cache<{len(defn.head)}> cache_{fn};")
    out("")
    for fn in fn_order:
        defn = defs[fn]
        params = [h.name for h in defn.head]
        bases = sorted(
            (e for e in by_fn[fn] if not e.is_definition()),
            key=lambda e: (e.constant_positions(), tuple(map(expr_key, e.head))),
        )
        for beq in bases:
            bparams = [h.name for h in beq.head if isinstance(h, Var)]
            out(_signature(_variant_name(beq), bparams) + ";")
        out(_signature(fn, params) + ";")
    out("")

    # definitions: base-case variants first, then the general function
    for fn in fn_order:
        defn = defs[fn]
        params = [h.name for h in defn.head]
        bases = sorted(
            (e for e in by_fn[fn] if not e.is_definition()),
            key=lambda e: (e.constant_positions(), tuple(map(expr_key, e.head))),
        )
        for beq in bases:
            bparams = [h.name for h in beq.head if isinstance(h, Var)]
            if not free_vars(beq.body) <= set(bparams):
                raise EmissionError(f"base case of {fn} uses unbound sizes")
            out(_signature(_variant_name(beq), bparams) + " {")
            out(f"  return {_cxx(beq.body)};")
            out("}")
            out("")
        out(_signature(fn, params) + " {")
        key = ", ".join(f"rt::key_part({p})" for p in params)
        out(f"  const rt::Key<{len(params)}> key_{{{key}}};")
        out(f"  if (const rt::Int *hit = cache_{fn}.find(key_)) return *hit;")
        for beq in bases:
            conds = " && ".join(
                f"{params[i]} == {beq.head[i].value}" for i in beq.constant_positions()
            )
            bargs = ", ".join(
                params[i] for i, h in enumerate(beq.head) if isinstance(h, Var)
            )
            out(f"  if ({conds}) return {_variant_name(beq)}({bargs});")
        out(f"  rt::Int r_ = {_cxx(defn.body)};")
        out(f"  cache_{fn}.store(key_, r_);")
        out("  return r_;")
        out("}")
        out("")
    out("}  // namespace")
    out("")

    doms = program.fdomains[program.entry]
    arity = len(doms)
    out("int main(int argc, char **argv) {")
    out(f"  // arguments: {' '.join(d.name for d in doms) if doms else '(none)'}")
    out(f"  std::vector<rt::Int> args_;")
    out(f"  if (!rt::parse_args(argc, argv, {arity}, args_)) return 2;")
    call_args = ", ".join(f"args_[{i}]" for i in range(arity))
    out(f"  std::cout << {program.entry}({call_args}) << std::endl;")
    out("  return 0;")
    out("}")
    text = "\n".join(lines) + "\n"
    return EmittedProgram(text, arity, doms)
