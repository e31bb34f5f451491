"""Exact first-order model counting via compilation to recursive equations.

The pipeline parses a many-sorted first-order instance, Skolemizes away
existential quantifiers, compiles the clausal sentence into recursive
algebraic function definitions, completes those definitions with base
cases, and evaluates them exactly (or emits a standalone C++ program).
"""

from fomc.logic import (
    Atom,
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
)

__all__ = [
    "Atom",
    "Clause",
    "Constant",
    "Domain",
    "Equality",
    "Literal",
    "PredApp",
    "Predicate",
    "Sentence",
    "Variable",
    "WfomcInstance",
]
