"""Bundling of DFA guards into per-agent cubes.

A guard over counting atoms is encoded as a BDD over the ``N * |AP|`` Boolean
variables "agent i carries proposition p", ordered agent-major. Because each
agent's variables are contiguous in the order, every 1-path of the reduced
BDD factors into one literal conjunction per agent. One path gives one cube,
and distinct paths of a BDD never share a satisfying assignment.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Optional, Sequence

import numpy as np

from .automaton import Dfa
from .bdd import BddManager
from .cltl import And, Atom, FalseF, Formula, NegAtom, Or, TrueF

DEFAULT_MAX_VARS = 64

# A per-agent conjunction: one entry per proposition, True / False / None
# (None = unconstrained).
AgentConj = tuple


class GuardError(ValueError):
    pass


def conj_str(conj: AgentConj, props: Sequence[str]) -> str:
    lits = [(p if v else "!" + p) for p, v in zip(props, conj) if v is not None]
    return " & ".join(lits) if lits else "true"


def conj_holds(conj: AgentConj, letter: frozenset, props: Sequence[str]) -> bool:
    return all(v is None or ((p in letter) == v) for p, v in zip(props, conj))


@dataclass(frozen=True)
class AgentCube:
    factors: tuple  # AgentConj per agent

    @property
    def n_agents(self) -> int:
        return len(self.factors)

    def letter_count(self) -> int:
        return prod(2 ** sum(v is None for v in f) for f in self.factors)

    def contains(self, letter: Sequence[frozenset], props: Sequence[str]) -> bool:
        return all(conj_holds(f, l, props) for f, l in zip(self.factors, letter))

    def format(self, props: Sequence[str]) -> str:
        return " ; ".join(f"({conj_str(f, props)})" for f in self.factors)


@dataclass
class GuardBdd:
    manager: BddManager
    root: int
    n_agents: int
    props: tuple

    def var_index(self, agent: int, prop: str) -> int:
        return agent * len(self.props) + self.props.index(prop)

    def satcount(self) -> int:
        return self.manager.satcount(self.root)


def make_manager(n_agents: int, props: Sequence[str], max_vars: int = DEFAULT_MAX_VARS) -> BddManager:
    n_vars = n_agents * len(props)
    if n_agents < 1:
        raise GuardError("need at least one agent")
    if n_vars > max_vars:
        raise GuardError(f"{n_vars} BDD variables exceeds the cap of {max_vars}")
    return BddManager(n_vars)


def guard_to_bdd(
    g: Formula,
    n_agents: int,
    props: Sequence[str],
    manager: Optional[BddManager] = None,
    max_vars: int = DEFAULT_MAX_VARS,
) -> GuardBdd:
    props = tuple(props)
    if manager is None:
        manager = make_manager(n_agents, props, max_vars)
    k = len(props)

    def build(f: Formula) -> int:
        if isinstance(f, TrueF):
            return manager.TRUE
        if isinstance(f, FalseF):
            return manager.FALSE
        if isinstance(f, (Atom, NegAtom)):
            if f.cp.prop not in props:
                raise GuardError(f"proposition {f.cp.prop!r} not in {props}")
            j = props.index(f.cp.prop)
            u = manager.threshold([i * k + j for i in range(n_agents)], f.cp.threshold)
            return u if isinstance(f, Atom) else manager.neg(u)
        if isinstance(f, And):
            u = manager.TRUE
            for c in f.children:
                u = manager.conj(u, build(c))
            return u
        if isinstance(f, Or):
            u = manager.FALSE
            for c in f.children:
                u = manager.disj(u, build(c))
            return u
        raise GuardError(f"not a guard formula: {f}")

    return GuardBdd(manager, build(g), n_agents, props)


def extract_cubes(b: GuardBdd) -> list[AgentCube]:
    k = len(b.props)
    cubes = []
    for path in b.manager.paths(b.root):
        factors = []
        for i in range(b.n_agents):
            factors.append(tuple(path.get(i * k + j) for j in range(k)))
        cubes.append(AgentCube(tuple(factors)))
    return cubes


def guard_cubes(dfa: Dfa, n_agents: int, props: Sequence[str], max_vars: int = DEFAULT_MAX_VARS) -> list[list[AgentCube]]:
    """Cube list for every transition of ``dfa`` (same order as ``dfa.transitions``)."""
    manager = make_manager(n_agents, props, max_vars)
    return [extract_cubes(guard_to_bdd(t.guard, n_agents, props, manager)) for t in dfa.transitions]


def cube_count_report(dfa: Dfa, n_agents: int, props: Sequence[str], max_vars: int = DEFAULT_MAX_VARS) -> list[dict]:
    manager = make_manager(n_agents, props, max_vars)
    rows = []
    for t in dfa.transitions:
        b = guard_to_bdd(t.guard, n_agents, props, manager)
        rows.append(
            {
                "source": t.source,
                "target": t.target,
                "guard": str(t.guard),
                "cubes": len(extract_cubes(b)),
                "letters": b.satcount(),
            }
        )
    return rows


def conj_mask(conj: AgentConj, label_bits: np.ndarray) -> np.ndarray:
    """States whose label satisfies ``conj``; ``label_bits`` is (states, props) bool."""
    mask = np.ones(label_bits.shape[0], dtype=bool)
    for j, v in enumerate(conj):
        if v is not None:
            mask &= label_bits[:, j] == v
    return mask
