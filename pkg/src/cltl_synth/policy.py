"""Decoupled DFA-constrained strategies and their greedy optimization.

A strategy holds one action table per (DFA state, agent group). In the
``shared`` mode every agent belongs to one group, ``per-agent`` gives every
agent its own table and ``grouped`` takes an explicit partition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .dualtree import CHUNK, DualTree, Expansion, unique_rows

MODES = ("shared", "per-agent", "grouped")


@dataclass
class DecoupledStrategy:
    tables: np.ndarray  # (n_dfa_states, n_groups, n_states) action indices
    groups: list  # list of agent-index lists
    mode: str = "shared"

    def __post_init__(self):
        self.tables = np.asarray(self.tables, dtype=np.int64)
        self.group_of = {}
        for g, members in enumerate(self.groups):
            for i in members:
                if i in self.group_of:
                    raise ValueError(f"agent {i} appears in two groups")
                self.group_of[i] = g
        if sorted(self.group_of) != list(range(len(self.group_of))):
            raise ValueError("groups must partition the agents 0..N-1")
        if self.tables.ndim != 3 or self.tables.shape[1] != len(self.groups):
            raise ValueError("tables must have shape (Q, n_groups, S)")

    @property
    def n_agents(self) -> int:
        return len(self.group_of)

    def table(self, q: int, agent: int) -> np.ndarray:
        return self.tables[q, self.group_of[agent]]

    def action(self, q: int, agent: int, state: int) -> int:
        return int(self.tables[q, self.group_of[agent], state])

    def copy(self) -> "DecoupledStrategy":
        return DecoupledStrategy(self.tables.copy(), [list(g) for g in self.groups], self.mode)

    def to_dict(self, action_values: Optional[np.ndarray] = None) -> dict:
        out = {"mode": self.mode, "groups": self.groups, "actions": self.tables.tolist()}
        if action_values is not None:
            out["action_values"] = np.asarray(action_values)[self.tables].tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DecoupledStrategy":
        return cls(np.asarray(d["actions"]), d["groups"], d.get("mode", "grouped"))


def initial_strategy(
    n_states: int,
    n_dfa_states: int,
    n_agents: int,
    mode: str = "shared",
    groups: Optional[Sequence[Sequence[int]]] = None,
) -> DecoupledStrategy:
    """First action everywhere."""
    if mode == "shared":
        groups = [list(range(n_agents))]
    elif mode == "per-agent":
        groups = [[i] for i in range(n_agents)]
    elif mode == "grouped":
        if groups is None:
            raise ValueError("grouped mode needs explicit groups")
        groups = [list(g) for g in groups]
    else:
        raise ValueError(f"unknown sharing mode {mode!r}")
    return DecoupledStrategy(np.zeros((n_dfa_states, len(groups), n_states), dtype=np.int64), groups, mode)


def random_strategy(n_states, n_actions, n_dfa_states, n_agents, rng, mode="per-agent", groups=None):
    s = initial_strategy(n_states, n_dfa_states, n_agents, mode, groups)
    s.tables = rng.integers(0, n_actions, size=s.tables.shape)
    return s


def _other_products(norms: np.ndarray) -> np.ndarray:
    """``out[e, i] = prod_{j != i} norms[e, j]`` without dividing."""
    M, N = norms.shape
    left = np.ones((M, N))
    right = np.ones((M, N))
    for j in range(1, N):
        left[:, j] = left[:, j - 1] * norms[:, j - 1]
        right[:, N - 1 - j] = right[:, N - j] * norms[:, N - j]
    return left * right


def _edge_pairs(tree: DualTree, q: int, ex):
    """Distinct (parent vector, agent formula) pairs on prospective ``q`` edges.

    Returns ``u`` with one masked parent vector per pair and ``inv`` mapping
    every (edge, agent) to its row of ``u``; None when no edge targets ``q``.
    """
    sel = ex.source == q
    if not np.any(sel):
        return None
    kp = tree.R.view[ex.parent[sel]]
    al = ex.alpha[sel]
    pairs = np.stack([kp.ravel(), al.ravel()], axis=1)
    uniq, inv = unique_rows(pairs)
    u = tree.values.data[uniq[:, 0]] * tree.masks[uniq[:, 1]]
    return u, inv.reshape(kp.shape)


def _group_target(mdp, strategy: DecoupledStrategy, q: int, group: int, u, inv) -> np.ndarray:
    """Vector ``g`` with objective(pi) = P_pi @ g for the agents of ``group``."""
    colsum = {}
    norms = np.empty(inv.shape)
    for j in range(strategy.n_agents):
        t = strategy.table(q, j)
        key = t.tobytes()
        if key not in colsum:
            # ||P_pi v||_1 = colsum(P_pi) . v for nonnegative v
            colsum[key] = u @ mdp.policy_matrix(t).sum(axis=0)
        norms[:, j] = colsum[key][inv[:, j]]
    weights = _other_products(norms)
    agg = np.zeros(u.shape[0])
    for i in strategy.groups[group]:
        agg += np.bincount(inv[:, i], weights=weights[:, i], minlength=u.shape[0])
    return agg @ u


def group_objective(
    tree: DualTree, strategy: DecoupledStrategy, q: int, group: int, table=None, edges: str = "tree"
) -> np.ndarray:
    """Per-state objective of ``table`` (default: the current one) for one group.

    Weights of the other agents are taken from the current strategy.
    """
    target = _target(tree, strategy, q, group, edges)
    if target is None:
        return np.zeros(tree.mdp.n_states)
    if table is None:
        table = strategy.tables[q, group]
    return tree.mdp.policy_matrix(np.asarray(table)) @ target


EDGE_SETS = ("tree", "frontier")


def candidate_blocks(tree: DualTree, edges: str = "tree", chunk: int = CHUNK) -> Iterator[Expansion]:
    """Edges entering the objective, in blocks of about ``chunk`` (edge, agent) pairs.

    ``frontier``: only the children the next growth step would create.
    ``tree``: those plus every existing edge, i.e. all edges of the tree as it
    will be after the next growth.
    """
    if edges not in EDGE_SETS:
        raise ValueError(f"unknown edge set {edges!r}")
    N = tree.n_agents
    if edges == "tree":
        old = tree.tree_edges()
        step = max(1, chunk // N)
        for i in range(0, len(old.parent), step):
            sl = slice(i, i + step)
            yield Expansion(old.parent[sl], old.source[sl], old.cube[sl], old.alpha[sl])
    per_vertex = max((sum(len(c) for _, c, _ in o) for o in tree.expansions.values()), default=1)
    step = max(1, chunk // max(1, per_vertex * N))
    F = tree.frontier
    for i in range(0, len(F), step):
        ex = tree.expansion(F[i:i + step])
        if len(ex.parent):
            yield ex


def candidate_edges(tree: DualTree, edges: str = "tree") -> Expansion:
    """All candidate edges as one expansion."""
    blocks = list(candidate_blocks(tree, edges))
    if not blocks:
        empty = np.zeros(0, dtype=np.int64)
        return Expansion(empty, empty, empty, np.zeros((0, tree.n_agents), dtype=np.int64))
    return Expansion(*(np.concatenate([getattr(b, f) for b in blocks]) for f in ("parent", "source", "cube", "alpha")))


def _target(tree: DualTree, strategy: DecoupledStrategy, q: int, group: int, edges: str):
    """Summed target vector over all blocks, or None when no edge targets ``q``."""
    target = None
    for ex in candidate_blocks(tree, edges):
        pair = _edge_pairs(tree, q, ex)
        if pair is not None:
            part = _group_target(tree.mdp, strategy, q, group, *pair)
            target = part if target is None else target + part
    return target


def optimize_policies(
    tree: DualTree, strategy: DecoupledStrategy, sweeps: int = 1, edges: str = "tree"
) -> DecoupledStrategy:
    """Coordinate ascent on the weighted edge objective, one DFA state at a time.

    Every candidate edge whose child carries DFA label ``q`` contributes, for
    agent ``i``, the operator applied to the agent's parent vector, weighted by
    the product of the other agents' total masses on that edge. The objective
    is separable over states, so the new table is the per-state argmax
    (lowest index wins ties).
    """
    sources = sorted({q for opts in tree.expansions.values() for q, _, _ in opts})
    for q in sources:
        for _ in range(sweeps):
            for g in range(len(strategy.groups)):
                target = _target(tree, strategy, q, g, edges)
                if target is None:
                    break
                qvals = tree.mdp.kernel @ target  # (S, A)
                strategy.tables[q, g] = np.argmax(qvals, axis=1)
    return strategy
