import numpy as np
import pytest
from _instances import PROPS, all_joint_states, brute_force, random_instance, random_mdp

from cltl_synth.automaton import compile_dfa, run
from cltl_synth.cltl import parse
from cltl_synth.dualtree import BudgetExceeded, DualTree, TreeError, run_tree, single_agent_operator
from cltl_synth.guards import guard_cubes
from cltl_synth.oracle import monolithic_evaluate
from cltl_synth.policy import random_strategy


def test_operator_definition():
    rng = np.random.default_rng(0)
    mdp = random_mdp(rng, 5, 3)
    pol = rng.integers(0, 3, 5)
    mask = np.array([1, 0, 1, 1, 0])
    w = rng.random(5)
    want = [sum(mdp.kernel[x, pol[x], y] * mask[y] * w[y] for y in range(5)) for x in range(5)]
    np.testing.assert_allclose(single_agent_operator(mdp, pol, mask, w), want)
    with pytest.raises(TreeError):
        single_agent_operator(mdp, pol, mask, w[:4])


@pytest.mark.parametrize("seed", range(6))
def test_bound_matches_trajectory_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, n_agents=2, states=(3, 3), actions=(2, 2))
    res = run_tree(inst.mdp, inst.dfa, inst.cubes, 2, 3, inst.strategy)
    for x0 in all_joint_states(3, 2):
        want = brute_force(inst.mdp, inst.dfa, inst.strategy, 2, x0, 3)
        assert res.bound(x0) == pytest.approx(want, abs=1e-12), inst.formula


@pytest.mark.parametrize("seed", range(4))
def test_three_agents_match_monolithic(seed):
    rng = np.random.default_rng(200 + seed)
    inst = random_instance(rng, n_agents=3, states=(3, 4), actions=(2, 2))
    res = run_tree(inst.mdp, inst.dfa, inst.cubes, 3, 4, inst.strategy)
    for x0 in all_joint_states(inst.mdp.n_states, 3)[::5]:
        want = monolithic_evaluate(inst.mdp, inst.dfa, inst.strategy, 3, x0, 4)
        assert res.bound(x0) == pytest.approx(want, abs=1e-12)


def test_monotone_in_horizon_and_pruning():
    rng = np.random.default_rng(7)
    for _ in range(5):
        inst = random_instance(rng)
        xs = all_joint_states(inst.mdp.n_states, 2)
        prev = np.zeros(len(xs))
        for T in (1, 2, 4, 6):
            b = np.array([run_tree(inst.mdp, inst.dfa, inst.cubes, 2, T, inst.strategy).bound(x) for x in xs])
            assert np.all(b >= prev - 1e-12)
            prev = b
        pruned = run_tree(inst.mdp, inst.dfa, inst.cubes, 2, 6, inst.strategy, theta_product=1e-2, theta_single=1e-2)
        assert all(pruned.bound(x) <= p + 1e-12 for x, p in zip(xs, prev))


def test_sharing_and_flat_counts():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, mode="shared")
    dual = run_tree(inst.mdp, inst.dfa, inst.cubes, 2, 5, inst.strategy)
    flat = run_tree(inst.mdp, inst.dfa, inst.cubes, 2, 5, inst.strategy, dedup=False)
    assert flat.tree.n_kappa == flat.tree.n_vertices * 2
    assert dual.tree.n_kappa <= flat.tree.n_kappa
    assert dual.tree.n_vertices == flat.tree.n_vertices
    for x0 in all_joint_states(inst.mdp.n_states, 2):
        assert dual.bound(x0) == flat.bound(x0)


def test_relation_is_total_and_consistent():
    rng = np.random.default_rng(11)
    inst = random_instance(rng)
    tree = run_tree(inst.mdp, inst.dfa, inst.cubes, 2, 4, inst.strategy).tree
    alive = np.flatnonzero(tree.z_alive.view)
    R = tree.R.view[alive]
    assert tree.k_alive.view[R].all()
    # each non-root vertex's vectors hang off its parent's vectors
    for z, row in zip(alive, R):
        par = tree.z_parent.data[z]
        if par < 0:
            continue
        assert np.array_equal(tree.k_parent.data[row], tree.R.data[par])


def test_witness_paths_are_accepted():
    rng = np.random.default_rng(5)
    inst = random_instance(rng)
    tree = run_tree(inst.mdp, inst.dfa, inst.cubes, 2, 3, inst.strategy).tree
    for z in np.flatnonzero(tree.z_alive.view)[1:]:
        q = int(tree.z_source.data[z])
        # following the cubes from the vertex's label reaches q_f
        for cid in tree.witness_path(z):
            c = tree.cubes[cid]
            letter = [frozenset(p for p, v in zip(PROPS, f) if v) for f in c.factors]
            truth = [sum(cp.prop in l for l in letter) >= cp.threshold for cp in tree.dfa.atoms]
            q = tree.dfa.step(q, truth)
        assert q == tree.dfa.accepting


def test_accepting_initial_letter_gives_one():
    mdp = random_mdp(np.random.default_rng(1), 4, 2)
    s = int(np.flatnonzero(mdp.label_bits[:, 0])[0])
    dfa = compile_dfa(parse("[p, 2]", PROPS, 2))
    cubes = guard_cubes(dfa, 2, PROPS)
    strat = random_strategy(4, 2, dfa.n_states, 2, np.random.default_rng(0))
    assert run_tree(mdp, dfa, cubes, 2, 2, strat).bound([s, s]) == 1.0


def test_unsatisfiable_gives_zero():
    rng = np.random.default_rng(2)
    mdp = random_mdp(rng, 4, 2)
    dfa = compile_dfa(parse("F [p, 3]", PROPS, 2))
    cubes = guard_cubes(dfa, 2, PROPS)
    strat = random_strategy(4, 2, dfa.n_states, 2, rng)
    res = run_tree(mdp, dfa, cubes, 2, 5, strat)
    assert all(res.bound(x) == 0.0 for x in all_joint_states(4, 2))


def test_vector_budget():
    rng = np.random.default_rng(4)
    inst = random_instance(rng)
    with pytest.raises(BudgetExceeded):
        run_tree(inst.mdp, inst.dfa, inst.cubes, 2, 6, inst.strategy, dedup=False, max_vectors=3)


def test_bound_rejects_bad_x0():
    rng = np.random.default_rng(4)
    inst = random_instance(rng)
    tree = DualTree(inst.mdp, inst.dfa, inst.cubes, 2)
    with pytest.raises(TreeError):
        tree.bound([0])
    with pytest.raises(TreeError):
        tree.bound([0, 99])


@pytest.mark.parametrize("dedup", [True, False])
def test_fused_step_equals_grow_update_prune(dedup):
    rng = np.random.default_rng(21)
    for _ in range(6):
        inst = random_instance(rng)
        a = DualTree(inst.mdp, inst.dfa, inst.cubes, 2, dedup=dedup)
        b = DualTree(inst.mdp, inst.dfa, inst.cubes, 2, dedup=dedup)
        for _ in range(5):
            a.grow(inst.strategy)
            a.value_update()
            a.prune(0.02, 0.05)
            b.step(inst.strategy, 0.02, 0.05, chunk=7)
            assert a.n_vertices == b.n_vertices
            assert a.n_kappa == b.n_kappa
        for x0 in all_joint_states(inst.mdp.n_states, 2):
            assert a.bound(x0) == pytest.approx(b.bound(x0), abs=1e-14)
