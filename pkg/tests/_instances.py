"""Random small instances shared by the oracle-based tests."""
import itertools
from dataclasses import dataclass

import numpy as np

from cltl_synth.automaton import Dfa, compile_dfa
from cltl_synth.cltl import parse
from cltl_synth.guards import guard_cubes
from cltl_synth.model import SingleAgentMdp
from cltl_synth.policy import DecoupledStrategy, random_strategy

PROPS = ("p", "q")


@dataclass
class Instance:
    mdp: SingleAgentMdp
    formula: str
    dfa: Dfa
    cubes: list
    strategy: DecoupledStrategy
    n_agents: int


def random_formula(rng, n_agents: int) -> str:
    def atom():
        p = PROPS[int(rng.integers(len(PROPS)))]
        return f"[{p}, {int(rng.integers(1, n_agents + 1))}]"

    kind = int(rng.integers(4))
    if kind == 0:
        return atom()
    if kind == 1:
        return f"F {atom()}"
    if kind == 2:
        return f"{atom()} U {atom()}"
    depth = int(rng.integers(1, 4))
    return " & ".join(["X " * d + atom() for d in range(depth + 1)])


def random_mdp(rng, n_states: int, n_actions: int) -> SingleAgentMdp:
    kernel = rng.random((n_states, n_actions, n_states)) ** 3
    kernel /= kernel.sum(axis=2, keepdims=True)
    labels = [{p for p in PROPS if rng.random() < 0.4} for _ in range(n_states)]
    return SingleAgentMdp(kernel, labels, PROPS)


def random_instance(rng, n_agents: int = 2, states=(4, 6), actions=(2, 3), mode="per-agent") -> Instance:
    s = int(rng.integers(states[0], states[1] + 1))
    a = int(rng.integers(actions[0], actions[1] + 1))
    mdp = random_mdp(rng, s, a)
    text = random_formula(rng, n_agents)
    dfa = compile_dfa(parse(text, PROPS, n_agents))
    cubes = guard_cubes(dfa, n_agents, PROPS)
    strategy = random_strategy(s, a, dfa.n_states, n_agents, rng, mode=mode)
    return Instance(mdp, text, dfa, cubes, strategy, n_agents)


def all_joint_states(n_states: int, n_agents: int):
    grids = np.meshgrid(*[np.arange(n_states)] * n_agents, indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, n_agents).tolist()


def brute_force(mdp, dfa, strategy, n_agents, x0, horizon):
    """Enumerate every joint trajectory of length ``horizon``."""
    bits = mdp.label_bits

    def letter(states):
        return [sum(bits[s, PROPS.index(cp.prop)] for s in states) >= cp.threshold for cp in dfa.atoms]

    total = 0.0
    frontier = {(tuple(x0), dfa.step(dfa.initial, letter(x0))): 1.0}
    for _ in range(horizon):
        nxt = {}
        for (xs, q), pr in frontier.items():
            if q == dfa.accepting:
                total += pr
                continue
            if q == dfa.dead:
                continue
            rows = [mdp.kernel[s, strategy.action(q, i, s)] for i, s in enumerate(xs)]
            for ys in itertools.product(range(mdp.n_states), repeat=n_agents):
                p = pr * np.prod([rows[i][y] for i, y in enumerate(ys)])
                if p == 0:
                    continue
                key = (ys, dfa.step(q, letter(ys)))
                nxt[key] = nxt.get(key, 0.0) + p
        frontier = nxt
    return total + sum(p for (_, q), p in frontier.items() if q == dfa.accepting)
