"""
Checking the bound against exact and sampled values
===================================================

On a tiny random model the joint product space is small enough to solve
exactly. Without pruning the dual-tree value equals the exact probability;
with pruning it drops below it, and simulation agrees with both.
"""

import numpy as np

from cltl_synth import SingleAgentMdp, compile_dfa, guard_cubes, monolithic_evaluate, monte_carlo, parse, run_tree
from cltl_synth.policy import random_strategy

rng = np.random.default_rng(3)
kernel = rng.random((5, 2, 5)) ** 3
kernel /= kernel.sum(axis=2, keepdims=True)
mdp = SingleAgentMdp(kernel, [set(), {"p"}, set(), {"q"}, {"p"}], ("p", "q"))

dfa = compile_dfa(parse("(! [q, 2]) U [p, 2]", mdp.props, n_agents=2))
cubes = guard_cubes(dfa, 2, mdp.props)
strategy = random_strategy(5, 2, dfa.n_states, 2, rng)

x0 = [0, 2]
exact = monolithic_evaluate(mdp, dfa, strategy, 2, x0, horizon=6)
full = run_tree(mdp, dfa, cubes, 2, 6, strategy).bound(x0)
pruned = run_tree(mdp, dfa, cubes, 2, 6, strategy, theta_product=1e-2).bound(x0)
freq, se = monte_carlo(mdp, dfa, strategy, 2, x0, 6, runs=50_000, seed=1)

print(f"exact     {exact:.6f}")
print(f"dual tree {full:.6f}")
print(f"pruned    {pruned:.6f}")
print(f"simulated {freq:.6f} +- {se:.6f}")
