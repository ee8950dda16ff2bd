"""Reference computations used to check the dual tree.

``monolithic_evaluate`` runs exact backward recursion on the product of all
agents and the DFA. ``monte_carlo`` simulates the closed loop. The flat
witness tree is the dual tree with vector sharing switched off.
"""
from __future__ import annotations

import math
import time
from typing import Optional, Sequence

import numpy as np

from .automaton import Dfa
from .dualtree import BudgetExceeded, run_tree
from .model import SingleAgentMdp

DEFAULT_BUDGET = 10**6
MC_BLOCK = 4096
_MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _letter_indices(dfa: Dfa, bits: np.ndarray, states: np.ndarray, props: Sequence[str]) -> np.ndarray:
    """DFA letter index for joint states given as an (..., N) integer array."""
    counts = bits[states].sum(axis=-2)  # (..., P)
    letter = np.zeros(states.shape[:-1], dtype=np.int64)
    for j, cp in enumerate(dfa.atoms):
        p = props.index(cp.prop)
        letter |= (counts[..., p] >= cp.threshold).astype(np.int64) << j
    return letter


def monolithic_evaluate(
    mdp: SingleAgentMdp,
    dfa: Dfa,
    strategy,
    n_agents: int,
    x0: Sequence[int],
    horizon: int,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Exact probability of reaching the accepting state within ``horizon`` steps."""
    S, N, Q = mdp.n_states, n_agents, dfa.n_states
    if S**N * Q > budget:
        raise BudgetExceeded(f"product space of {S**N * Q} entries exceeds budget {budget}")
    props = list(mdp.props)
    grids = np.stack(np.meshgrid(*[np.arange(S)] * N, indexing="ij"), axis=-1).reshape(-1, N)
    letters = _letter_indices(dfa, mdp.label_bits.astype(np.int64), grids, props)
    nxt = dfa.table[:, letters]  # (Q, S**N)
    cols = np.arange(S**N)
    shape = (S,) * N

    V = np.zeros((Q, S**N))
    V[dfa.accepting] = 1.0
    for _ in range(horizon):
        new = np.zeros_like(V)
        new[dfa.accepting] = 1.0
        for q in range(Q):
            if q in (dfa.accepting, dfa.dead):
                continue
            F = V[nxt[q], cols].reshape(shape)
            for i in range(N):
                P = mdp.policy_matrix(strategy.table(q, i))
                F = np.moveaxis(np.tensordot(P, F, axes=([1], [i])), 0, i)
            new[q] = F.reshape(-1)
        V = new
    x0 = np.asarray(x0, dtype=np.int64)
    q0 = int(dfa.table[dfa.initial, _letter_indices(dfa, mdp.label_bits.astype(np.int64), x0[None, :], props)[0]])
    return float(V[q0, np.ravel_multi_index(tuple(x0), shape)])


def monte_carlo(
    mdp: SingleAgentMdp,
    dfa: Dfa,
    strategy,
    n_agents: int,
    x0: Sequence[int],
    horizon: int,
    runs: int,
    seed: int = 0,
) -> tuple[float, float]:
    """Fraction of simulated runs whose DFA run accepts within ``horizon`` steps.

    Runs are simulated in blocks of ``MC_BLOCK``; block ``b`` draws from a
    generator seeded with ``mix64(seed + b)``.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    props = list(mdp.props)
    bits = mdp.label_bits.astype(np.int64)
    cdf = np.cumsum(mdp.kernel, axis=2)
    cdf[..., -1] = 1.0
    group = np.array([strategy.group_of[i] for i in range(n_agents)])
    x0 = np.asarray(x0, dtype=np.int64)
    hits = 0
    for b, start in enumerate(range(0, runs, MC_BLOCK)):
        n = min(MC_BLOCK, runs - start)
        rng = np.random.default_rng(mix64(seed + b))
        x = np.tile(x0, (n, 1))
        q = dfa.table[dfa.initial, _letter_indices(dfa, bits, x, props)]
        for _ in range(horizon):
            for i in range(n_agents):
                a = strategy.tables[q, group[i], x[:, i]]
                u = rng.random(n)
                x[:, i] = (cdf[x[:, i], a] < u[:, None]).sum(axis=1)
            q = dfa.table[q, _letter_indices(dfa, bits, x, props)]
        hits += int(np.sum(q == dfa.accepting))
    freq = hits / runs
    return freq, math.sqrt(freq * (1.0 - freq) / runs)


def flat_witness_tree_run(
    mdp: SingleAgentMdp,
    dfa: Dfa,
    cubes,
    strategy,
    n_agents: int,
    horizon: int,
    theta_product: float = 0.0,
    theta_single: float = 0.0,
    max_vectors: Optional[int] = None,
):
    """Baseline storing one value vector per (vertex, agent) pair.

    Returns ``(bound, stats)`` where ``bound(x0)`` evaluates the lower bound.
    """
    t0 = time.perf_counter()
    result = run_tree(
        mdp, dfa, cubes, n_agents, horizon, strategy,
        theta_product=theta_product, theta_single=theta_single,
        dedup=False, max_vectors=max_vectors,
    )
    tree = result.tree
    stats = {
        "vertices": tree.n_vertices,
        "stored_vectors": tree.n_kappa,
        "peak_vectors": tree.peak_vectors,
        "peak_bytes": tree.peak_bytes,
        "seconds": time.perf_counter() - t0,
        "history": [h.as_dict() for h in result.history],
    }
    return tree.bound, stats
