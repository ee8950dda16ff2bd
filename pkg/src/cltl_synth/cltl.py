"""Co-safe counting LTL: AST, parser and finite-trace semantics.

Formulas are built over counting atoms ``[p, m]`` which hold on a joint
letter when at least ``m`` agents carry proposition ``p``. Negation is only
allowed directly on atoms, so every formula is in negation normal form.

Concrete syntax (whitespace-insensitive)::

    formula  := or
    or       := and ('|' and)*
    and      := until ('&' until)*
    until    := unary ('U' until)?          # right associative
    unary    := '!' unary | 'X' unary | 'F' unary | primary
    primary  := '[' prop ',' threshold ']' | 'true' | 'false' | '(' formula ')'
    threshold:= INT | 'N' | 'N' '/' INT     # N/k is floor division

``!`` may only end up on an atom; ``F f`` is rewritten to ``true U f``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional, Sequence

__all__ = [
    "CltlSyntaxError",
    "CountingProp",
    "Formula",
    "TrueF",
    "FalseF",
    "Atom",
    "NegAtom",
    "And",
    "Or",
    "Next",
    "Until",
    "TRUE",
    "FALSE",
    "eventually",
    "parse",
    "atoms_of",
    "eval_counting_prop",
    "eval_trace",
    "eval_assignment_trace",
]

JointLetter = Sequence[frozenset]


class CltlSyntaxError(ValueError):
    """Raised for malformed formula text; ``pos`` is the character offset."""

    def __init__(self, message: str, pos: Optional[int] = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class CountingProp:
    prop: str
    threshold: int

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError(f"negative threshold in [{self.prop}, {self.threshold}]")

    def __str__(self) -> str:
        return f"[{self.prop},{self.threshold}]"


class Formula:
    """Base class of formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FalseF(Formula):
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class Atom(Formula):
    cp: CountingProp

    def __str__(self) -> str:
        return str(self.cp)


@dataclass(frozen=True)
class NegAtom(Formula):
    cp: CountingProp

    def __str__(self) -> str:
        return f"!{self.cp}"


@dataclass(frozen=True)
class And(Formula):
    children: tuple

    def __str__(self) -> str:
        return "(" + " & ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Or(Formula):
    children: tuple

    def __str__(self) -> str:
        return "(" + " | ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Next(Formula):
    child: Formula

    def __str__(self) -> str:
        return f"X {self.child}"


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} U {self.right})"


TRUE = TrueF()
FALSE = FalseF()


def eventually(f: Formula) -> Until:
    return Until(TRUE, f)


def atoms_of(f: Formula) -> tuple[CountingProp, ...]:
    """Distinct counting atoms of ``f`` in sorted order."""
    found: set[CountingProp] = set()

    def visit(g: Formula) -> None:
        if isinstance(g, (Atom, NegAtom)):
            found.add(g.cp)
        elif isinstance(g, (And, Or)):
            for c in g.children:
                visit(c)
        elif isinstance(g, Next):
            visit(g.child)
        elif isinstance(g, Until):
            visit(g.left)
            visit(g.right)

    visit(f)
    return tuple(sorted(found))


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[\[\],()!&|/]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise CltlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, ap_decl: frozenset, n_agents: Optional[int]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.ap = ap_decl
        self.n_agents = n_agents

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise CltlSyntaxError(f"expected {text!r}, found {found!r}", self.tok.pos)
        return self.advance()

    def parse(self) -> Formula:
        f = self.parse_or()
        if self.tok.kind != "eof":
            raise CltlSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return f

    def parse_or(self) -> Formula:
        parts = [self.parse_and()]
        while self.tok.text == "|":
            self.advance()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and(self) -> Formula:
        parts = [self.parse_until()]
        while self.tok.text == "&":
            self.advance()
            parts.append(self.parse_until())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_until(self) -> Formula:
        left = self.parse_unary()
        if self.tok.kind == "ident" and self.tok.text == "U":
            self.advance()
            return Until(left, self.parse_until())
        return left

    def parse_unary(self) -> Formula:
        tok = self.tok
        if tok.text == "!":
            self.advance()
            inner = self.parse_unary()
            if isinstance(inner, Atom):
                return NegAtom(inner.cp)
            raise CltlSyntaxError("negation is only allowed on counting atoms", tok.pos)
        if tok.kind == "ident" and tok.text == "X":
            self.advance()
            return Next(self.parse_unary())
        if tok.kind == "ident" and tok.text == "F":
            self.advance()
            return eventually(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        tok = self.tok
        if tok.text == "(":
            self.advance()
            f = self.parse_or()
            self.expect(")")
            return f
        if tok.text == "[":
            self.advance()
            name = self.advance()
            if name.kind != "ident":
                raise CltlSyntaxError("expected proposition name", name.pos)
            if name.text not in self.ap:
                raise CltlSyntaxError(f"undeclared proposition {name.text!r}", name.pos)
            self.expect(",")
            m = self.parse_threshold()
            self.expect("]")
            return Atom(CountingProp(name.text, m))
        if tok.kind == "ident" and tok.text in ("true", "True"):
            self.advance()
            return TRUE
        if tok.kind == "ident" and tok.text in ("false", "False"):
            self.advance()
            return FALSE
        found = tok.text or "end of input"
        raise CltlSyntaxError(f"unexpected {found!r}", tok.pos)

    def parse_threshold(self) -> int:
        tok = self.advance()
        if tok.kind == "int":
            return int(tok.text)
        if tok.kind == "ident" and tok.text == "N":
            if self.n_agents is None:
                raise CltlSyntaxError("symbolic threshold needs an agent count", tok.pos)
            if self.tok.text == "/":
                self.advance()
                k = self.advance()
                if k.kind != "int" or int(k.text) == 0:
                    raise CltlSyntaxError("expected positive integer divisor", k.pos)
                return self.n_agents // int(k.text)
            return self.n_agents
        raise CltlSyntaxError("expected threshold", tok.pos)


def parse(text: str, ap_decl: Iterable[str], n_agents: Optional[int] = None) -> Formula:
    """Parse ``text`` into a formula over the declared propositions.

    ``n_agents`` resolves the symbolic thresholds ``N`` and ``N/k``.
    """
    ap = frozenset(ap_decl)
    if not ap:
        raise ValueError("empty proposition set")
    return _Parser(text, ap, n_agents).parse()


# --------------------------------------------------------------------------
# semantics


def eval_counting_prop(letter: JointLetter, cp: CountingProp) -> bool:
    return sum(1 for l in letter if cp.prop in l) >= cp.threshold


Valuation = Callable[[object, CountingProp], bool]


def _witness_index(trace: Sequence, f: Formula, holds: Valuation) -> Optional[int]:
    n = len(trace)
    if n == 0:
        raise ValueError("empty trace")

    for end in range(n):

        @lru_cache(maxsize=None)
        def sat(g: Formula, t: int) -> bool:
            # bounded semantics: obligations past `end` are not satisfied
            if isinstance(g, TrueF):
                return True
            if isinstance(g, FalseF):
                return False
            if t > end:
                return False
            if isinstance(g, Atom):
                return holds(trace[t], g.cp)
            if isinstance(g, NegAtom):
                return not holds(trace[t], g.cp)
            if isinstance(g, And):
                return all(sat(c, t) for c in g.children)
            if isinstance(g, Or):
                return any(sat(c, t) for c in g.children)
            if isinstance(g, Next):
                return sat(g.child, t + 1)
            if isinstance(g, Until):
                for i in range(t, end + 1):
                    if sat(g.right, i):
                        return True
                    if not sat(g.left, i):
                        return False
                return False
            raise TypeError(f"unknown formula node {g!r}")

        if sat(f, 0):
            return end
    return None


def eval_trace(trace: Sequence[JointLetter], f: Formula) -> Optional[int]:
    """Index of the last letter of the shortest witnessing prefix, or None."""
    return _witness_index(trace, f, eval_counting_prop)


def eval_assignment_trace(
    word: Sequence[Mapping[CountingProp, bool]], f: Formula
) -> Optional[int]:
    """Same as :func:`eval_trace` for words of atom truth assignments."""
    return _witness_index(word, f, lambda a, cp: bool(a[cp]))
