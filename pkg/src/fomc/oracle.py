"""Brute-force weighted model counting over explicit finite domains.

The oracle grounds a sentence, enumerates every structure over the
ground atoms of the *declared* predicates, and sums structure weights.
It is deliberately simple and serves as the reference implementation the
compiled pipeline is tested against.  A structure-count guard refuses
instances beyond ``max_structures`` (default ``2**24``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from fomc.logic import (
    Clause,
    Constant,
    Domain,
    Equality,
    PredApp,
    Sentence,
    Variable,
    WfomcInstance,
)

DEFAULT_MAX_STRUCTURES = 2**24

GroundAtom = tuple[str, tuple[str, ...]]


class OracleLimitError(Exception):
    """The instance exceeds the brute-force structure budget."""


@dataclass(frozen=True)
class GroundClause:
    pos: frozenset[GroundAtom]
    neg: frozenset[GroundAtom]


def interpret_domains(
    sentence: Sentence, sizes: dict[Domain, int]
) -> tuple[dict[Domain, tuple[str, ...]], dict[str, str]]:
    """Assign explicit elements to every domain and to every constant.

    Subdomains take a prefix of their parent's elements; declared
    constants are pinned to the *last* elements of their domain so they
    stay clear of subdomain prefixes.
    """
    interp: dict[Domain, tuple[str, ...]] = {}

    def build(d: Domain) -> tuple[str, ...]:
        if d in interp:
            return interp[d]
        if d not in sizes:
            raise KeyError(f"no size given for domain {d.name}")
        n = sizes[d]
        if n < 0:
            raise ValueError(f"negative size for domain {d.name}")
        if d.parent is None:
            elems = tuple(f"{d.name}.{i}" for i in range(n))
        else:
            parent = build(d.parent)
            if n > len(parent):
                raise ValueError(f"subdomain {d.name} larger than its parent")
            elems = parent[:n]
        interp[d] = elems
        return elems

    for d in sentence.domains:
        build(d)

    by_dom: dict[Domain, list[Constant]] = {}
    for c in sentence.constants:
        by_dom.setdefault(c.domain, []).append(c)
    const_elem: dict[str, str] = {}
    for d, consts in by_dom.items():
        elems = interp[d]
        consts = sorted(consts, key=lambda c: c.name)
        if len(consts) > len(elems):
            raise ValueError(f"domain {d.name} too small for its {len(consts)} constants")
        for i, c in enumerate(consts):
            const_elem[c.name] = elems[len(elems) - len(consts) + i]
    return interp, const_elem


def ground(instance: WfomcInstance) -> tuple[list[GroundAtom], list[GroundClause]]:
    """Ground atoms of all declared predicates and all ground clauses.

    Ground clauses that are trivially true (they contain a true equality
    or are vacuous over an empty domain) are omitted; false equalities
    are dropped from the remaining ones.
    """
    sentence = instance.sentence
    sizes = instance.size_map
    interp, const_elem = interpret_domains(sentence, sizes)

    atoms: list[GroundAtom] = []
    for p in sentence.sorted_predicates():
        for combo in product(*(interp[d] for d in p.arg_domains)):
            atoms.append((p.name, combo))

    clauses: list[GroundClause] = []
    for cl in sentence.sorted_clauses():
        if any(len(interp[d]) == 0 for d in cl.vacuous_over):
            continue
        uvars = [v for v, _ in cl.binders]
        for ub in product(*(interp[d] for _, d in cl.binders)):
            env = dict(zip(uvars, ub))
            pos: set[GroundAtom] = set()
            neg: set[GroundAtom] = set()
            trivially_true = False
            evars = [v for v, _ in cl.exists]
            for eb in product(*(interp[d] for _, d in cl.exists)):
                full = env | dict(zip(evars, eb))

                def elem(t) -> str:
                    if isinstance(t, Variable):
                        return full[t.name]
                    return const_elem[t.name]

                for lit in cl.literals:
                    a = lit.atom
                    if isinstance(a, Equality):
                        holds = elem(a.left) == elem(a.right)
                        if holds is lit.positive:
                            trivially_true = True
                            break
                        continue
                    g = (a.pred.name, tuple(elem(t) for t in a.args))
                    (pos if lit.positive else neg).add(g)
                if trivially_true:
                    break
            if not trivially_true:
                clauses.append(GroundClause(frozenset(pos), frozenset(neg)))
    return atoms, clauses


def _popcount(x: np.ndarray) -> np.ndarray:
    table = _popcount.table  # type: ignore[attr-defined]
    out = table[x & 0xFFFF].astype(np.int64)
    shifted = x >> np.uint64(16)
    while shifted.any():
        out += table[shifted & 0xFFFF]
        shifted = shifted >> np.uint64(16)
    return out


_popcount.table = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.uint8)  # type: ignore[attr-defined]


def brute_force_wfomc(
    instance: WfomcInstance, max_structures: int = DEFAULT_MAX_STRUCTURES
) -> int:
    """Exact WFOMC by enumerating all structures over the ground atoms."""
    atoms, gclauses = ground(instance)
    n = len(atoms)
    if 1 << n > max_structures:
        raise OracleLimitError(
            f"{n} ground atoms means 2^{n} structures, over the budget of {max_structures}"
        )
    index = {a: i for i, a in enumerate(atoms)}

    for gc in gclauses:
        if not gc.pos and not gc.neg:
            return 0

    masks = np.arange(1 << n, dtype=np.uint64)
    sat = np.ones(1 << n, dtype=bool)
    for gc in gclauses:
        pos = np.uint64(sum(1 << index[a] for a in gc.pos))
        neg = np.uint64(sum(1 << index[a] for a in gc.neg))
        sat &= ((masks & pos) != 0) | ((~masks & neg) != 0)

    # Group atoms by weight pair so the per-structure weight reduces to
    # popcounts, then tally exact products per count profile in Python.
    weights = {p.name: instance.weight(p) for p in instance.sentence.predicates}
    classes: dict[tuple[int, int], int] = {}
    class_bits: list[int] = []
    for i, (pname, _) in enumerate(atoms):
        w = weights[pname]
        if w == (1, 1):
            continue
        if w not in classes:
            classes[w] = len(class_bits)
            class_bits.append(0)
        class_bits[classes[w]] |= 1 << i

    if not class_bits:
        return int(np.count_nonzero(sat))

    sizes = [bin(b).count("1") for b in class_bits]
    strides = [1]
    for s in sizes[:-1]:
        strides.append(strides[-1] * (s + 1))
    code = np.zeros(1 << n, dtype=np.int64)
    for b, stride in zip(class_bits, strides):
        code += _popcount(masks & np.uint64(b)) * stride
    hist = np.bincount(code[sat], minlength=strides[-1] * (sizes[-1] + 1))

    total = 0
    inv_classes = {v: k for k, v in classes.items()}
    for flat, count in enumerate(hist):
        if count == 0:
            continue
        weight = 1
        rem = flat
        for ci, (size, stride) in enumerate(zip(sizes, strides)):
            c = (rem // stride) % (size + 1)
            wp, wn = inv_classes[ci]
            weight *= wp**c * wn ** (size - c)
        total += int(count) * weight
    return total
