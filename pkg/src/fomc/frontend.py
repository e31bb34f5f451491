"""Instance-file parsing and printing.

An instance file is line-oriented: ``#`` starts a comment, blank lines
are ignored, and every other line is either a declaration::

    domain Gamma 2
    predicate P(Gamma, Delta) 1 1
    constant a in Gamma

or a single formula.  Formulas use ``A``/``E`` quantifiers (scoping to
the end of the enclosing parenthesized group), the connectives ``!``,
``&``, ``|``, ``->``, ``<->`` in decreasing binding strength, predicate
atoms, and ``=`` between terms.  Domain and predicate names start with
an upper-case letter; variables and constants are lower-case.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class FAtom:
    pred: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class FEq:
    left: str
    right: str


@dataclass(frozen=True)
class FNot:
    body: "Formula"


@dataclass(frozen=True)
class FAnd:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class FOr:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class FImp:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class FIff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class FQuant:
    kind: str  # "A" or "E"
    variables: tuple[str, ...]
    domain: str
    body: "Formula"


Formula = Union[FAtom, FEq, FNot, FAnd, FOr, FImp, FIff, FQuant]


@dataclass(frozen=True)
class DomainDecl:
    name: str
    size: int | None = None


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arg_domains: tuple[str, ...]
    weights: tuple[int, int] | None = None


@dataclass(frozen=True)
class ConstantDecl:
    name: str
    domain: str


@dataclass(frozen=True)
class InstanceAst:
    domains: tuple[DomainDecl, ...] = ()
    predicates: tuple[PredicateDecl, ...] = ()
    constants: tuple[ConstantDecl, ...] = ()
    formulas: tuple[Formula, ...] = ()


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#.*)
      | (?P<arrow2><->)
      | (?P<arrow>->)
      | (?P<num>-?\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<sym>[(),.=!&|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(line: str, lineno: int) -> list[Token]:
    out = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise ParseError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup or ""
        if kind == "comment":
            break
        if kind != "ws":
            out.append(Token(kind, m.group(), lineno, pos + 1))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, tokens: list[Token], lineno: int):
        self.tokens = tokens
        self.i = 0
        self.lineno = lineno

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            last = self.tokens[-1] if self.tokens else None
            col = last.col + len(last.text) if last else 1
            raise ParseError("unexpected end of line", self.lineno, col)
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, got {t.text!r}", t.line, t.col)
        return t

    def error(self, message: str) -> ParseError:
        t = self.peek()
        if t is None:
            last = self.tokens[-1] if self.tokens else None
            return ParseError(message, self.lineno, last.col + len(last.text) if last else 1)
        return ParseError(message, t.line, t.col)


# ---------------------------------------------------------------------------
# Formula parsing (precedence climbing; quantifiers scope to the end of
# the enclosing group)


def _parse_formula(c: _Cursor) -> Formula:
    t = c.peek()
    if t is not None and t.kind == "ident" and t.text in ("A", "E"):
        after = c.tokens[c.i + 1] if c.i + 1 < len(c.tokens) else None
        if after is not None and after.kind == "ident":
            c.next()
            variables = [c.next()]
            if variables[0].kind != "ident" or not variables[0].text[0].islower():
                raise ParseError("expected a variable name", variables[0].line, variables[0].col)
            while c.peek() is not None and c.peek().text == ",":
                c.next()
                v = c.next()
                if v.kind != "ident" or not v.text[0].islower():
                    raise ParseError("expected a variable name", v.line, v.col)
                variables.append(v)
            kw = c.next()
            if kw.text != "in":
                raise ParseError(f"expected 'in', got {kw.text!r}", kw.line, kw.col)
            dom = c.next()
            if dom.kind != "ident" or not dom.text[0].isupper():
                raise ParseError("expected a domain name", dom.line, dom.col)
            c.expect(".")
            body = _parse_formula(c)
            return FQuant(t.text, tuple(v.text for v in variables), dom.text, body)
    return _parse_iff(c)


def _parse_iff(c: _Cursor) -> Formula:
    left = _parse_imp(c)
    while c.peek() is not None and c.peek().text == "<->":
        c.next()
        left = FIff(left, _parse_imp(c))
    return left


def _parse_imp(c: _Cursor) -> Formula:
    left = _parse_or(c)
    if c.peek() is not None and c.peek().text == "->":
        c.next()
        return FImp(left, _parse_imp(c))
    return left


def _parse_or(c: _Cursor) -> Formula:
    left = _parse_and(c)
    while c.peek() is not None and c.peek().text == "|":
        c.next()
        left = FOr(left, _parse_and(c))
    return left


def _parse_and(c: _Cursor) -> Formula:
    left = _parse_unary(c)
    while c.peek() is not None and c.peek().text == "&":
        c.next()
        left = FAnd(left, _parse_unary(c))
    return left


def _parse_unary(c: _Cursor) -> Formula:
    t = c.peek()
    if t is None:
        raise c.error("expected a formula")
    if t.text == "!":
        c.next()
        return FNot(_parse_unary(c))
    if t.text == "(":
        c.next()
        inner = _parse_formula(c)
        c.expect(")")
        return inner
    return _parse_atom(c)


def _parse_atom(c: _Cursor) -> Formula:
    t = c.next()
    if t.kind != "ident":
        raise ParseError(f"expected an atom, got {t.text!r}", t.line, t.col)
    if t.text[0].isupper():
        nxt = c.peek()
        if nxt is not None and nxt.text == "(":
            c.next()
            args = [_parse_term(c)]
            while c.peek() is not None and c.peek().text == ",":
                c.next()
                args.append(_parse_term(c))
            c.expect(")")
            return FAtom(t.text, tuple(args))
        return FAtom(t.text, ())
    # lower-case identifier: must be the left side of an equality
    nxt = c.peek()
    if nxt is not None and nxt.text == "=":
        c.next()
        return FEq(t.text, _parse_term(c))
    raise ParseError(f"expected '=' after term {t.text!r}", t.line, t.col)


def _parse_term(c: _Cursor) -> str:
    t = c.next()
    if t.kind != "ident" or not t.text[0].islower():
        raise ParseError(f"expected a term, got {t.text!r}", t.line, t.col)
    return t.text


def parse_formula(text: str, lineno: int = 1) -> Formula:
    c = _Cursor(_tokenize(text, lineno), lineno)
    f = _parse_formula(c)
    t = c.peek()
    if t is not None:
        raise ParseError(f"unexpected trailing {t.text!r}", t.line, t.col)
    return f


# ---------------------------------------------------------------------------
# Instance parsing


def parse_instance(text: str) -> InstanceAst:
    domains: list[DomainDecl] = []
    predicates: list[PredicateDecl] = []
    constants: list[ConstantDecl] = []
    formulas: list[Formula] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw, lineno)
        if not tokens:
            continue
        head = tokens[0]
        if head.text == "domain":
            c = _Cursor(tokens[1:], lineno)
            name = c.next()
            if name.kind != "ident" or not name.text[0].isupper():
                raise ParseError("expected a domain name", name.line, name.col)
            size = None
            if c.peek() is not None:
                num = c.next()
                if num.kind != "num" or int(num.text) < 0:
                    raise ParseError("expected a non-negative size", num.line, num.col)
                size = int(num.text)
            if c.peek() is not None:
                raise c.error("unexpected trailing tokens")
            domains.append(DomainDecl(name.text, size))
        elif head.text == "predicate":
            c = _Cursor(tokens[1:], lineno)
            name = c.next()
            if name.kind != "ident" or not name.text[0].isupper():
                raise ParseError("expected a predicate name", name.line, name.col)
            args: list[str] = []
            if c.peek() is not None and c.peek().text == "(":
                c.next()
                while True:
                    d = c.next()
                    if d.kind != "ident" or not d.text[0].isupper():
                        raise ParseError("expected a domain name", d.line, d.col)
                    args.append(d.text)
                    t = c.next()
                    if t.text == ")":
                        break
                    if t.text != ",":
                        raise ParseError(f"expected ',' or ')', got {t.text!r}", t.line, t.col)
            weights = None
            if c.peek() is not None:
                wp = c.next()
                wn = c.next()
                if wp.kind != "num" or wn.kind != "num":
                    raise ParseError("expected two integer weights", wp.line, wp.col)
                weights = (int(wp.text), int(wn.text))
            if c.peek() is not None:
                raise c.error("unexpected trailing tokens")
            predicates.append(PredicateDecl(name.text, tuple(args), weights))
        elif head.text == "constant":
            c = _Cursor(tokens[1:], lineno)
            name = c.next()
            if name.kind != "ident" or not name.text[0].islower():
                raise ParseError("expected a constant name", name.line, name.col)
            kw = c.next()
            if kw.text != "in":
                raise ParseError(f"expected 'in', got {kw.text!r}", kw.line, kw.col)
            dom = c.next()
            if dom.kind != "ident" or not dom.text[0].isupper():
                raise ParseError("expected a domain name", dom.line, dom.col)
            if c.peek() is not None:
                raise c.error("unexpected trailing tokens")
            constants.append(ConstantDecl(name.text, dom.text))
        else:
            formulas.append(parse_formula(raw, lineno))
    return InstanceAst(tuple(domains), tuple(predicates), tuple(constants), tuple(formulas))


# ---------------------------------------------------------------------------
# Printing


def format_formula(f: Formula) -> str:
    return _fmt(f, 0)


_PREC = {FIff: 1, FImp: 2, FOr: 3, FAnd: 4}


def _fmt(f: Formula, min_prec: int) -> str:
    """Print with minimal parentheses, preserving the parse shape.

    ``min_prec`` is the lowest precedence printable at this position
    without parentheses; left-associative operators allow their own
    precedence on the left only, the right-associative ``->`` mirrors that.
    """
    if isinstance(f, (FAtom, FEq)):
        if isinstance(f, FEq):
            return f"{f.left} = {f.right}"
        return f.pred + (f"({', '.join(f.args)})" if f.args else "")
    if isinstance(f, FNot):
        return "!" + _fmt(f.body, 5)
    if isinstance(f, FQuant):
        s = f"{f.kind} {', '.join(f.variables)} in {f.domain}. {_fmt(f.body, 0)}"
        return f"({s})" if min_prec > 0 else s
    op = {FIff: "<->", FImp: "->", FOr: "|", FAnd: "&"}[type(f)]
    prec = _PREC[type(f)]
    if isinstance(f, FImp):
        s = f"{_fmt(f.left, prec + 1)} {op} {_fmt(f.right, prec)}"
    else:
        s = f"{_fmt(f.left, prec)} {op} {_fmt(f.right, prec + 1)}"
    return f"({s})" if prec < min_prec else s


def format_instance(ast: InstanceAst) -> str:
    lines = []
    for d in ast.domains:
        lines.append(f"domain {d.name}" + (f" {d.size}" if d.size is not None else ""))
    for p in ast.predicates:
        args = f"({', '.join(p.arg_domains)})" if p.arg_domains else ""
        w = f" {p.weights[0]} {p.weights[1]}" if p.weights is not None else ""
        lines.append(f"predicate {p.name}{args}{w}")
    for c in ast.constants:
        lines.append(f"constant {c.name} in {c.domain}")
    for f in ast.formulas:
        lines.append(format_formula(f))
    return "\n".join(lines) + "\n"
