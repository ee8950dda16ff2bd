"""Formula -> DFA compilation over counting-atom truth assignments.

States are derivatives (progressions) of the formula, identified up to
associativity/commutativity/idempotence of ``&`` and ``|``. The explored
automaton is minimized with Hopcroft's algorithm; the single accepting state
is the derivative ``true`` and is absorbing.

Letters of the symbolic alphabet are integers: bit ``j`` of a letter is the
truth value of ``dfa.atoms[j]``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .cltl import (
    FALSE,
    TRUE,
    And,
    Atom,
    CountingProp,
    FalseF,
    Formula,
    NegAtom,
    Next,
    Or,
    TrueF,
    Until,
    atoms_of,
    eval_counting_prop,
)

MAX_ATOMS = 20
MAX_DERIVATIVES = 100_000

Assignment = Union[Mapping[CountingProp, bool], Sequence[bool], int]


class AutomatonError(ValueError):
    pass


# --------------------------------------------------------------------------
# normalized constructors


def _key(f: Formula) -> str:
    return str(f)


def mk_and(parts) -> Formula:
    flat: dict[str, Formula] = {}
    stack = list(parts)
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.extend(g.children)
        elif isinstance(g, FalseF):
            return FALSE
        elif not isinstance(g, TrueF):
            flat[_key(g)] = g
    if not flat:
        return TRUE
    if len(flat) == 1:
        return next(iter(flat.values()))
    return And(tuple(flat[k] for k in sorted(flat)))


def mk_or(parts) -> Formula:
    flat: dict[str, Formula] = {}
    stack = list(parts)
    while stack:
        g = stack.pop()
        if isinstance(g, Or):
            stack.extend(g.children)
        elif isinstance(g, TrueF):
            return TRUE
        elif not isinstance(g, FalseF):
            flat[_key(g)] = g
    if not flat:
        return FALSE
    if len(flat) == 1:
        return next(iter(flat.values()))
    return Or(tuple(flat[k] for k in sorted(flat)))


def normalize(f: Formula) -> Formula:
    if isinstance(f, And):
        return mk_and(normalize(c) for c in f.children)
    if isinstance(f, Or):
        return mk_or(normalize(c) for c in f.children)
    if isinstance(f, Next):
        return Next(normalize(f.child))
    if isinstance(f, Until):
        return Until(normalize(f.left), normalize(f.right))
    return f


def canonical(f: Formula) -> Formula:
    """Disjunctive normal form with absorption.

    Residuals are positive Boolean combinations of a finite set of temporal
    subformulas. Bringing them into an absorption-free DNF makes equal
    combinations syntactically equal, which bounds the number of residuals;
    flattening alone does not once Boolean structure nests under ``U``.
    """
    lits: dict[str, Formula] = {}
    clauses = _dnf(f, lits)
    kept = [c for c in clauses if not any(o < c for o in clauses)]
    return mk_or(mk_and(lits[k] for k in c) for c in kept)


def _dnf(f: Formula, lits: dict) -> set:
    if isinstance(f, TrueF):
        return {frozenset()}
    if isinstance(f, FalseF):
        return set()
    if isinstance(f, Or):
        out = set()
        for c in f.children:
            out |= _dnf(c, lits)
        return out
    if isinstance(f, And):
        out = {frozenset()}
        for c in f.children:
            part = _dnf(c, lits)
            out = {a | b for a in out for b in part}
            if len(out) > MAX_DERIVATIVES:
                raise AutomatonError("normal form too large")
        return out
    k = _key(f)
    lits[k] = f
    return {frozenset([k])}


def derivative(f: Formula, truth: Mapping[CountingProp, bool]) -> Formula:
    """Residual obligation of ``f`` after reading one letter."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Atom):
        return TRUE if truth[f.cp] else FALSE
    if isinstance(f, NegAtom):
        return FALSE if truth[f.cp] else TRUE
    if isinstance(f, And):
        return mk_and(derivative(c, truth) for c in f.children)
    if isinstance(f, Or):
        return mk_or(derivative(c, truth) for c in f.children)
    if isinstance(f, Next):
        return f.child
    if isinstance(f, Until):
        return mk_or([derivative(f.right, truth), mk_and([derivative(f.left, truth), f])])
    raise TypeError(f"unknown formula node {f!r}")


# --------------------------------------------------------------------------
# guards


def guard_holds(g: Formula, truth: Mapping[CountingProp, bool]) -> bool:
    if isinstance(g, TrueF):
        return True
    if isinstance(g, FalseF):
        return False
    if isinstance(g, Atom):
        return bool(truth[g.cp])
    if isinstance(g, NegAtom):
        return not truth[g.cp]
    if isinstance(g, And):
        return all(guard_holds(c, truth) for c in g.children)
    if isinstance(g, Or):
        return any(guard_holds(c, truth) for c in g.children)
    raise TypeError(f"temporal operator in guard: {g}")


def _guard_from_letters(letters: frozenset, atoms: tuple, j: int = 0, prefix: int = 0) -> Formula:
    """Shannon expansion of a letter set over ``atoms[j:]``."""
    k = len(atoms)
    span = 1 << (k - j)
    hits = sum(1 for l in letters if (l & ((1 << j) - 1)) == prefix)
    if hits == 0:
        return FALSE
    if hits == span:
        return TRUE
    hi = _guard_from_letters(letters, atoms, j + 1, prefix | (1 << j))
    lo = _guard_from_letters(letters, atoms, j + 1, prefix)
    if hi == lo:
        return hi
    a = atoms[j]
    return mk_or([mk_and([Atom(a), hi]), mk_and([NegAtom(a), lo])])


# --------------------------------------------------------------------------
# DFA


@dataclass(frozen=True)
class Transition:
    source: int
    guard: Formula
    target: int
    letters: frozenset = field(repr=False, compare=False, default=frozenset())


@dataclass
class Dfa:
    atoms: tuple
    table: np.ndarray  # (n_states, 2**len(atoms)) next-state indices
    initial: int
    accepting: int
    dead: Optional[int]
    transitions: list
    residuals: list = field(default_factory=list, repr=False)

    @property
    def n_states(self) -> int:
        return self.table.shape[0]

    def letter_index(self, a: Assignment) -> int:
        if isinstance(a, (int, np.integer)):
            return int(a)
        if isinstance(a, Mapping):
            vals = [a[cp] for cp in self.atoms]
        else:
            vals = list(a)
            if len(vals) != len(self.atoms):
                raise ValueError("assignment length does not match atom count")
        return sum(1 << j for j, v in enumerate(vals) if v)

    def step(self, q: int, a: Assignment) -> int:
        return int(self.table[q, self.letter_index(a)])

    def incoming(self, target: int) -> list:
        return [t for t in self.transitions if t.target == target]

    def to_text(self) -> str:
        lines = [
            f"states {self.n_states}",
            f"initial {self.initial}",
            f"accepting {self.accepting}",
            f"dead {'-' if self.dead is None else self.dead}",
            "atoms " + " ".join(str(a) for a in self.atoms),
        ]
        for t in self.transitions:
            lines.append(f"trans {t.source} -> {t.target} : {t.guard}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "states": self.n_states,
            "initial": self.initial,
            "accepting": self.accepting,
            "dead": self.dead,
            "atoms": [[a.prop, a.threshold] for a in self.atoms],
            "transitions": [
                {"source": t.source, "target": t.target, "guard": str(t.guard)}
                for t in self.transitions
            ],
        }


def _truth(atoms: tuple, letter: int) -> dict:
    return {a: bool(letter >> j & 1) for j, a in enumerate(atoms)}


def _hopcroft(table: np.ndarray, accepting: set) -> list[int]:
    """Return a block id per state for the coarsest language-preserving partition."""
    n, sigma = table.shape
    inverse = [[[] for _ in range(n)] for _ in range(sigma)]
    for s in range(n):
        for c in range(sigma):
            inverse[c][int(table[s, c])].append(s)

    acc = frozenset(accepting)
    rej = frozenset(range(n)) - acc
    partition = [b for b in (acc, rej) if b]
    work = deque(partition[:])
    while work:
        splitter = work.popleft()
        for c in range(sigma):
            pre = set()
            for s in splitter:
                pre.update(inverse[c][s])
            if not pre:
                continue
            refined = []
            for block in partition:
                inter = block & pre
                diff = block - pre
                if inter and diff:
                    refined.extend([inter, diff])
                    if block in work:
                        work.remove(block)
                        work.extend([inter, diff])
                    else:
                        work.append(inter if len(inter) <= len(diff) else diff)
                else:
                    refined.append(block)
            partition = refined
    block_of = [0] * n
    for b, block in enumerate(partition):
        for s in block:
            block_of[s] = b
    return block_of


def compile_dfa(f: Formula) -> Dfa:
    """Compile ``f`` into a minimal total DFA over atom assignments."""
    atoms = atoms_of(f)
    if len(atoms) > MAX_ATOMS:
        raise AutomatonError(f"{len(atoms)} counting atoms exceeds the limit of {MAX_ATOMS}")
    sigma = 1 << len(atoms)
    truths = [_truth(atoms, l) for l in range(sigma)]

    start = canonical(normalize(f))
    index = {start: 0}
    residuals = [start]
    rows = []
    queue = deque([start])
    while queue:
        g = queue.popleft()
        row = []
        for l in range(sigma):
            h = canonical(derivative(g, truths[l]))
            if h not in index:
                if len(residuals) >= MAX_DERIVATIVES:
                    raise AutomatonError("derivative exploration did not close")
                index[h] = len(residuals)
                residuals.append(h)
                queue.append(h)
            row.append(index[h])
        rows.append(row)
    raw = np.array(rows, dtype=np.int64).reshape(len(residuals), sigma)

    accepting_raw = {index[TRUE]} if TRUE in index else set()
    block_of = _hopcroft(raw, accepting_raw)

    # renumber blocks in BFS order from the initial state
    order: dict[int, int] = {}
    rep: dict[int, int] = {}
    queue = deque([0])
    order[block_of[0]] = 0
    rep[block_of[0]] = 0
    while queue:
        s = queue.popleft()
        for l in range(sigma):
            t = int(raw[s, l])
            b = block_of[t]
            if b not in order:
                order[b] = len(order)
                rep[b] = t
                queue.append(t)
    n = len(order)
    table = np.empty((n, sigma), dtype=np.int64)
    for b, q in order.items():
        s = rep[b]
        table[q] = [order[block_of[int(t)]] for t in raw[s]]
    names = [None] * n
    for b, q in order.items():
        names[q] = residuals[rep[b]]

    if accepting_raw:
        accepting = order[block_of[index[TRUE]]]
    else:
        # unsatisfiable: add an unreachable accepting sink to keep the shape uniform
        accepting = n
        table = np.vstack([table, np.full((1, sigma), n, dtype=np.int64)])
        names.append(TRUE)
        n += 1

    dead = None
    for q in range(n):
        if q != accepting and np.all(table[q] == q):
            dead = q
            break

    transitions = []
    for q in range(n):
        by_target: dict[int, set] = {}
        for l in range(sigma):
            by_target.setdefault(int(table[q, l]), set()).add(l)
        for t in sorted(by_target):
            letters = frozenset(by_target[t])
            transitions.append(Transition(q, _guard_from_letters(letters, atoms), t, letters))
    return Dfa(atoms, table, 0, accepting, dead, transitions, names)


def letter_to_assignment(letter, atoms) -> dict:
    return {cp: eval_counting_prop(letter, cp) for cp in atoms}


def run(dfa: Dfa, word) -> tuple[int, Optional[int]]:
    """Run ``word`` from the initial state.

    Returns the final state and the first index ``t`` whose letter moved the
    automaton into the accepting state (None when it never did).
    """
    q = dfa.initial
    hit = None
    for t, a in enumerate(word):
        q = dfa.step(q, a)
        if hit is None and q == dfa.accepting:
            hit = t
    return q, hit
