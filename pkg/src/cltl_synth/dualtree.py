"""Dual-tree value iteration.

The multi-agent tree is rooted at the accepting DFA state. A child ``zc`` of
``z`` with edge cube ``alpha`` and DFA label ``q`` exists when the DFA moves
from ``q`` to ``label(z)`` on the letters of ``alpha``; every root path thus
spells one bundle of minimal witnesses. Per-agent value vectors live in the
single-agent tree and are shared between all (vertex, agent) pairs that
followed the same chain of (agent letter formula, policy) labels. ``R[z, i]``
gives the single-agent vertex holding agent ``i``'s vector for ``z``.

With ``dedup=False`` every (vertex, agent) pair gets its own vector, which is
the flat witness-tree baseline.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .automaton import Dfa
from .guards import AgentCube, conj_mask
from .model import SingleAgentMdp

_INT = np.int64


class TreeError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


def single_agent_operator(
    mdp: SingleAgentMdp, policy: np.ndarray, mask: np.ndarray, w: np.ndarray
) -> np.ndarray:
    """``out(x) = sum_x' T(x' | x, policy(x)) * mask(x') * w(x')``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (mdp.n_states,) or len(policy) != mdp.n_states:
        raise TreeError("dimension mismatch")
    return mdp.policy_matrix(np.asarray(policy)) @ (np.asarray(mask, dtype=float) * w)


class _Growable:
    """Append-only 1-D/2-D numpy buffer."""

    def __init__(self, width: Optional[int] = None, dtype=_INT, fill=0):
        self.width = width
        self.dtype = dtype
        self.fill = fill
        shape = (16,) if width is None else (16, width)
        self.data = np.full(shape, fill, dtype=dtype)
        self.n = 0

    def reserve(self, n: int) -> None:
        if n <= self.data.shape[0]:
            return
        cap = max(n, 2 * self.data.shape[0])
        shape = (cap,) if self.width is None else (cap, self.width)
        new = np.full(shape, self.fill, dtype=self.dtype)
        new[: self.n] = self.data[: self.n]
        self.data = new

    def extend(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=self.dtype)
        k = values.shape[0]
        self.reserve(self.n + k)
        self.data[self.n : self.n + k] = values
        ids = np.arange(self.n, self.n + k, dtype=_INT)
        self.n += k
        return ids

    @property
    def view(self) -> np.ndarray:
        return self.data[: self.n]


@dataclass
class TreeStats:
    iteration: int
    vertices: int
    single_vertices: int
    edges: int
    single_edges: int
    frontier: int
    depth: int
    pruned: int
    resident_vectors: int
    memory_bytes: int
    seconds: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Expansion:
    """Prospective children of a set of frontier vertices."""

    parent: np.ndarray  # (M,) multi-agent vertex ids
    source: np.ndarray  # (M,) DFA label of the child
    cube: np.ndarray  # (M,) global cube ids
    alpha: np.ndarray  # (M, N) per-agent formula ids


CHUNK = 1 << 16


def unique_rows(cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``np.unique(cols, axis=0, return_inverse=True)`` for nonnegative int rows.

    Rows are packed into one int64 key when the column ranges allow, which is
    much faster than the structured sort behind ``axis=0``.
    """
    cols = np.asarray(cols, dtype=_INT)
    if cols.shape[0] == 0:
        return cols.reshape(0, cols.shape[1]), np.zeros(0, dtype=_INT)
    radix = cols.max(axis=0) + 1
    if np.prod(radix.astype(float)) >= 2.0**62:
        uniq, inv = np.unique(cols, axis=0, return_inverse=True)
        return uniq, inv.reshape(-1)
    key = np.zeros(cols.shape[0], dtype=_INT)
    for j in range(cols.shape[1]):
        key = key * radix[j] + cols[:, j]
    ukey, first, inv = np.unique(key, return_index=True, return_inverse=True)
    return cols[first], inv.reshape(-1)


def _check_thresholds(theta_product: float, theta_single: float) -> None:
    if not (0.0 <= theta_product <= 1.0 and 0.0 <= theta_single <= 1.0):
        raise TreeError("thresholds must lie in [0, 1]")


def _survivors(wmax: np.ndarray, theta_product: float, theta_single: float) -> np.ndarray:
    """Leaves kept by pruning, given each agent's vector maximum (rows = leaves).

    The score is the product of the maxima, an upper bound on the leaf's value
    at any joint state; it is forced to zero when one agent's maximum falls
    below ``theta_single``.
    """
    keep = np.ones(len(wmax), dtype=bool)
    if theta_product > 0.0:
        keep &= np.prod(wmax, axis=1) >= theta_product
    if theta_single > 0.0:
        keep &= ~np.any(wmax < theta_single, axis=1)
    return keep


class DualTree:
    """Multi-agent tree, single-agent tree and the relation between them."""

    def __init__(
        self,
        mdp: SingleAgentMdp,
        dfa: Dfa,
        cubes: Sequence[Sequence[AgentCube]],
        n_agents: int,
        dedup: bool = True,
        max_vectors: Optional[int] = None,
    ):
        if len(cubes) != len(dfa.transitions):
            raise TreeError("need one cube list per DFA transition")
        self.mdp = mdp
        self.dfa = dfa
        self.n_agents = n_agents
        self.dedup = dedup
        self.max_vectors = max_vectors
        S = mdp.n_states

        # per-agent letter formulas and their state masks
        self.alpha_index: dict[tuple, int] = {}
        self.alphas: list[tuple] = []
        self.cubes: list[AgentCube] = []
        # expansions[q'] = list of (q, cube ids, alpha ids (n, N))
        self.expansions: dict[int, list] = {}
        for t, cl in zip(dfa.transitions, cubes):
            if t.source in (dfa.accepting, dfa.dead) or not cl:
                continue
            ids, rows = [], []
            for c in cl:
                if c.n_agents != n_agents:
                    raise TreeError("cube agent count does not match")
                ids.append(len(self.cubes))
                self.cubes.append(c)
                rows.append([self._intern_alpha(f) for f in c.factors])
            self.expansions.setdefault(t.target, []).append(
                (t.source, np.array(ids, dtype=_INT), np.array(rows, dtype=_INT).reshape(len(ids), n_agents))
            )
        self.cube_alpha = np.array(
            [[self.alpha_index[f] for f in c.factors] for c in self.cubes], dtype=_INT
        ).reshape(len(self.cubes), n_agents)
        self.masks = np.array(
            [conj_mask(a, mdp.label_bits) for a in self.alphas], dtype=float
        ).reshape(len(self.alphas), S)

        # multi-agent tree
        self.z_parent = _Growable()
        self.z_source = _Growable()  # DFA label L_Q
        self.z_cube = _Growable()
        self.z_depth = _Growable()
        self.z_alive = _Growable(dtype=bool, fill=False)
        self.R = _Growable(width=n_agents)

        # single-agent tree
        self.k_parent = _Growable()
        self.k_alpha = _Growable()
        self.k_q = _Growable()
        self.k_pol = _Growable()
        self.k_refs = _Growable()
        self.k_alive = _Growable(dtype=bool, fill=False)
        self.k_max = _Growable(dtype=float, fill=0.0)
        self.values = _Growable(width=S, dtype=float, fill=0.0)
        self.children: dict[int, dict[tuple, int]] = {}
        self.pending: list[np.ndarray] = []

        # interned policies: action tables and closed-loop matrices
        self.policy_index: dict[bytes, int] = {}
        self.policy_tables: list[np.ndarray] = []
        self.policy_matrices: list[np.ndarray] = []

        n_roots = 1 if dedup else n_agents
        roots = self._new_kappas(
            parent=np.full(n_roots, -1), alpha=np.full(n_roots, -1), q=np.full(n_roots, dfa.accepting), pol=np.full(n_roots, -1)
        )
        self.values.data[roots] = 1.0
        self.k_max.data[roots] = 1.0
        self.pending.clear()
        self.root = 0
        self.z_parent.extend([-1])
        self.z_source.extend([dfa.accepting])
        self.z_cube.extend([-1])
        self.z_depth.extend([0])
        self.z_alive.extend([True])
        self.R.extend(np.broadcast_to(roots if not dedup else roots[0], (1, n_agents)))
        np.add.at(self.k_refs.data, self.R.view[0], 1)
        self.frontier = np.array([0], dtype=_INT)
        self.iteration = 0
        self.depth = 0
        self.pruned_total = 0
        self.peak_vectors = self.n_kappa
        self.peak_bytes = self.memory_bytes()
        self.history: list[TreeStats] = []
        self._t0 = time.perf_counter()

    # ------------------------------------------------------------------ ids

    def _intern_alpha(self, conj: tuple) -> int:
        i = self.alpha_index.get(conj)
        if i is None:
            i = len(self.alphas)
            self.alpha_index[conj] = i
            self.alphas.append(conj)
        return i

    def policy_id(self, table: np.ndarray) -> int:
        table = np.ascontiguousarray(table, dtype=_INT)
        key = table.tobytes()
        i = self.policy_index.get(key)
        if i is None:
            if table.shape != (self.mdp.n_states,):
                raise TreeError("policy table has wrong length")
            if table.min() < 0 or table.max() >= self.mdp.n_actions:
                raise TreeError("action index out of range")
            i = len(self.policy_tables)
            self.policy_index[key] = i
            self.policy_tables.append(table.copy())
            self.policy_matrices.append(self.mdp.policy_matrix(table))
        return i

    def strategy_ids(self, strategy) -> np.ndarray:
        """(n_dfa_states, N) policy ids of a decoupled strategy."""
        ids = np.full((self.dfa.n_states, self.n_agents), -1, dtype=_INT)
        for q in range(self.dfa.n_states):
            if q in (self.dfa.accepting, self.dfa.dead):
                continue
            for i in range(self.n_agents):
                ids[q, i] = self.policy_id(strategy.table(q, i))
        return ids

    # ---------------------------------------------------------- properties

    @property
    def n_vertices(self) -> int:
        return int(self.z_alive.view.sum())

    @property
    def n_kappa(self) -> int:
        return int(self.k_alive.view.sum())

    def memory_bytes(self) -> int:
        S = self.mdp.n_states
        n_z, n_k = self.n_vertices, self.n_kappa
        return n_k * S * 8 + n_z * (4 + self.n_agents) * 8 + n_k * 7 * 8

    def stats(self, pruned: int = 0) -> TreeStats:
        n_z, n_k = self.n_vertices, self.n_kappa
        n_roots = 1 if self.dedup else self.n_agents
        return TreeStats(
            iteration=self.iteration,
            vertices=n_z,
            single_vertices=n_k,
            edges=n_z - 1,
            single_edges=n_k - n_roots,
            frontier=len(self.frontier),
            depth=self.depth,
            pruned=pruned,
            resident_vectors=n_k,
            memory_bytes=self.memory_bytes(),
            seconds=time.perf_counter() - self._t0,
        )

    # --------------------------------------------------------- single tree

    def _new_kappas(self, parent, alpha, q, pol) -> np.ndarray:
        k = len(parent)
        if self.max_vectors is not None and self.n_kappa + k > self.max_vectors:
            raise BudgetExceeded(
                f"{self.n_kappa + k} value vectors exceeds the budget of {self.max_vectors}"
            )
        ids = self.k_parent.extend(parent)
        self.k_alpha.extend(alpha)
        self.k_q.extend(q)
        self.k_pol.extend(pol)
        self.k_refs.extend(np.zeros(k))
        self.k_alive.extend(np.ones(k, dtype=bool))
        self.k_max.extend(np.zeros(k))
        self.values.reserve(self.k_parent.n)
        self.values.n = self.k_parent.n
        self.pending.append(ids)
        return ids

    # -------------------------------------------------------------- growth

    def expansion(self, frontier: Optional[np.ndarray] = None) -> Expansion:
        if frontier is None:
            frontier = self.frontier
        src = self.z_source.view[frontier]
        parents, sources, cubes, alphas = [], [], [], []
        for target, options in self.expansions.items():
            fz = frontier[src == target]
            if len(fz) == 0:
                continue
            for q, cube_ids, alpha_rows in options:
                n = len(cube_ids)
                parents.append(np.repeat(fz, n))
                sources.append(np.full(len(fz) * n, q, dtype=_INT))
                cubes.append(np.tile(cube_ids, len(fz)))
                alphas.append(np.tile(alpha_rows, (len(fz), 1)))
        if not parents:
            empty = np.zeros(0, dtype=_INT)
            return Expansion(empty, empty, empty, np.zeros((0, self.n_agents), dtype=_INT))
        return Expansion(
            np.concatenate(parents), np.concatenate(sources), np.concatenate(cubes), np.concatenate(alphas)
        )

    def tree_edges(self) -> Expansion:
        """Existing edges, described like an expansion (parent, child label, cube)."""
        alive = np.flatnonzero(self.z_alive.view)
        alive = alive[alive != self.root]
        cube = self.z_cube.view[alive]
        return Expansion(self.z_parent.view[alive], self.z_source.view[alive], cube, self.cube_alpha[cube])

    def grow(self, strategy) -> int:
        """Add one layer of children below the frontier; returns their count."""
        pol_ids = self.strategy_ids(strategy)
        ex = self.expansion()
        M, N = len(ex.parent), self.n_agents
        kp = self.R.view[ex.parent]  # (M, N)
        pol = pol_ids[ex.source]  # (M, N)
        if M == 0:
            self.frontier = np.zeros(0, dtype=_INT)
            self.iteration += 1
            return 0

        if self.dedup:
            flat_k = kp.ravel()
            flat_a = ex.alpha.ravel()
            flat_q = np.repeat(ex.source, N)
            flat_p = pol.ravel()
            keys = np.stack([flat_k, flat_a, flat_q, flat_p], axis=1)
            uniq, inverse = unique_rows(keys)
            target = np.empty(len(uniq), dtype=_INT)
            create = []
            for u, (k, a, q, p) in enumerate(uniq.tolist()):
                child = self.children.get(k, {}).get((a, q, p))
                if child is None:
                    create.append(u)
                else:
                    target[u] = child
            if create:
                create = np.array(create, dtype=_INT)
                new = self._new_kappas(uniq[create, 0], uniq[create, 1], uniq[create, 2], uniq[create, 3])
                target[create] = new
                for (k, a, q, p), kid in zip(uniq[create].tolist(), new.tolist()):
                    self.children.setdefault(k, {})[(a, q, p)] = kid
            R_new = target[inverse.reshape(-1)].reshape(M, N)
        else:
            new = self._new_kappas(
                kp.ravel(), ex.alpha.ravel(), np.repeat(ex.source, N), pol.ravel()
            )
            R_new = new.reshape(M, N)

        ids = self.z_parent.extend(ex.parent)
        self.z_source.extend(ex.source)
        self.z_cube.extend(ex.cube)
        self.z_depth.extend(self.z_depth.view[ex.parent] + 1)
        self.z_alive.extend(np.ones(M, dtype=bool))
        self.R.extend(R_new)
        np.add.at(self.k_refs.data, R_new.ravel(), 1)
        self.frontier = ids
        self.depth += 1
        self.iteration += 1
        self._track_peak()
        return M

    def value_update(self) -> int:
        """Compute values of single-agent vertices created since the last call.

        A vertex's value is the operator applied to its tree parent's value,
        so parents are always final before their children are touched.
        """
        if not self.pending:
            return 0
        ids = np.concatenate(self.pending)
        self.pending.clear()
        if len(ids) == 0:
            return 0
        alpha = self.k_alpha.view[ids]
        pol = self.k_pol.view[ids]
        parent = self.k_parent.view[ids]
        n_pol = max(len(self.policy_tables), 1)
        group = alpha * n_pol + pol
        order = np.argsort(group, kind="stable")
        bounds = np.flatnonzero(np.diff(group[order])) + 1
        vals = self.values.data
        for chunk in np.split(order, bounds):
            a, p = int(alpha[chunk[0]]), int(pol[chunk[0]])
            sel = ids[chunk]
            vals[sel] = (vals[parent[chunk]] * self.masks[a]) @ self.policy_matrices[p].T
        self.k_max.data[ids] = vals[ids].max(axis=1)
        return len(ids)

    # ---------------------------------------------------------- fused step

    def step(self, strategy, theta_product: float = 0.0, theta_single: float = 0.0, chunk: int = CHUNK) -> tuple[int, int]:
        """Grow, evaluate and prune one layer without materializing pruned leaves.

        Produces the same tree as ``grow``, ``value_update`` and ``prune`` in
        sequence. Candidate children are processed in blocks of about
        ``chunk`` (vertex, agent) pairs; returns (kept, pruned).
        """
        _check_thresholds(theta_product, theta_single)
        pol_ids = self.strategy_ids(strategy)
        F = self.frontier
        per_vertex = max((sum(len(c) for _, c, _ in opts) for opts in self.expansions.values()), default=1)
        block = max(1, chunk // max(1, per_vertex * self.n_agents))
        kept_ids, n_pruned = [], 0
        for start in range(0, len(F), block):
            ex = self.expansion(F[start:start + block])
            if len(ex.parent) == 0:
                continue
            ids, dropped = self._step_block(ex, pol_ids, theta_product, theta_single)
            kept_ids.append(ids)
            n_pruned += dropped
        self.frontier = np.concatenate(kept_ids) if kept_ids else np.zeros(0, dtype=_INT)
        self.depth += 1
        self.iteration += 1
        self.pruned_total += n_pruned
        self._track_peak()
        return len(self.frontier), n_pruned

    def _operator_rows(self, parents: np.ndarray, alpha: np.ndarray, pol: np.ndarray) -> np.ndarray:
        """Operator applied to stored vectors ``parents`` for each (alpha, policy) row."""
        out = np.empty((len(parents), self.mdp.n_states))
        n_pol = max(len(self.policy_tables), 1)
        group = alpha * n_pol + pol
        order = np.argsort(group, kind="stable")
        bounds = np.flatnonzero(np.diff(group[order])) + 1
        vals = self.values.data
        for idx in np.split(order, bounds):
            a, p = int(alpha[idx[0]]), int(pol[idx[0]])
            out[idx] = (vals[parents[idx]] * self.masks[a]) @ self.policy_matrices[p].T
        return out

    def _step_block(self, ex: Expansion, pol_ids, theta_product, theta_single):
        M, N = len(ex.parent), self.n_agents
        kp = self.R.view[ex.parent]
        pol = pol_ids[ex.source]
        flat_q = np.repeat(ex.source, N)
        if self.dedup:
            keys = np.stack([kp.ravel(), ex.alpha.ravel(), flat_q, pol.ravel()], axis=1)
            uniq, inverse = unique_rows(keys)
            target = np.full(len(uniq), -1, dtype=_INT)
            for u, (k, a, q, p) in enumerate(uniq.tolist()):
                child = self.children.get(k, {}).get((a, q, p))
                if child is not None:
                    target[u] = child
            missing = np.flatnonzero(target < 0)
            fresh = self._operator_rows(uniq[missing, 0], uniq[missing, 1], uniq[missing, 3])
            umax = np.empty(len(uniq))
            umax[target >= 0] = self.k_max.data[target[target >= 0]]
            umax[missing] = fresh.max(axis=1) if len(missing) else 0.0
            wmax = umax[inverse].reshape(M, N)
        else:
            fresh = self._operator_rows(kp.ravel(), ex.alpha.ravel(), pol.ravel())
            wmax = fresh.max(axis=1).reshape(M, N)

        keep = _survivors(wmax, theta_product, theta_single)
        n_keep = int(keep.sum())
        if n_keep == 0:
            return np.zeros(0, dtype=_INT), M

        if self.dedup:
            used = np.zeros(len(uniq), dtype=bool)
            used[inverse.reshape(M, N)[keep].ravel()] = True
            create = missing[used[missing]]
            if len(create):
                new = self._new_kappas(uniq[create, 0], uniq[create, 1], uniq[create, 2], uniq[create, 3])
                self.pending.clear()
                pos = np.searchsorted(missing, create)
                self.values.data[new] = fresh[pos]
                self.k_max.data[new] = umax[create]
                target[create] = new
                for (k, a, q, p), kid in zip(uniq[create].tolist(), new.tolist()):
                    self.children.setdefault(k, {})[(a, q, p)] = kid
            R_new = target[inverse].reshape(M, N)[keep]
        else:
            rows = np.flatnonzero(np.repeat(keep, N))
            new = self._new_kappas(kp.ravel()[rows], ex.alpha.ravel()[rows], flat_q[rows], pol.ravel()[rows])
            self.pending.clear()
            self.values.data[new] = fresh[rows]
            self.k_max.data[new] = wmax.ravel()[rows]
            R_new = new.reshape(n_keep, N)

        ids = self.z_parent.extend(ex.parent[keep])
        self.z_source.extend(ex.source[keep])
        self.z_cube.extend(ex.cube[keep])
        self.z_depth.extend(self.z_depth.view[ex.parent[keep]] + 1)
        self.z_alive.extend(np.ones(n_keep, dtype=bool))
        self.R.extend(R_new)
        np.add.at(self.k_refs.data, R_new.ravel(), 1)
        return ids, M - n_keep

    # ------------------------------------------------------------- pruning

    def prune(self, theta_product: float, theta_single: float) -> int:
        _check_thresholds(theta_product, theta_single)
        F = self.frontier
        if len(F) == 0:
            return 0
        drop = ~_survivors(self.k_max.data[self.R.view[F]], theta_product, theta_single)
        if not drop.any():
            return 0
        gone = F[drop]
        self.frontier = F[~drop]
        self.z_alive.data[gone] = False
        refs = self.R.view[gone].ravel()
        np.subtract.at(self.k_refs.data, refs, 1)
        self._collect(np.unique(refs))
        self.pruned_total += len(gone)
        return len(gone)

    def _collect(self, candidates: np.ndarray) -> None:
        dead = candidates[self.k_refs.data[candidates] == 0]
        if len(dead) == 0:
            return
        self.k_alive.data[dead] = False
        self.values.data[dead] = 0.0
        if self.dedup:
            for k, par, a, q, p in zip(
                dead.tolist(),
                self.k_parent.data[dead].tolist(),
                self.k_alpha.data[dead].tolist(),
                self.k_q.data[dead].tolist(),
                self.k_pol.data[dead].tolist(),
            ):
                self.children.pop(k, None)
                sib = self.children.get(par)
                if sib is not None and sib.get((a, q, p)) == k:
                    del sib[(a, q, p)]

    def _track_peak(self) -> None:
        self.peak_vectors = max(self.peak_vectors, self.n_kappa)
        self.peak_bytes = max(self.peak_bytes, self.memory_bytes())

    # --------------------------------------------------------------- bound

    def initial_dfa_state(self, x0: Sequence[int]) -> int:
        letter = [self.mdp.labels[s] for s in x0]
        truth = [sum(cp.prop in l for l in letter) >= cp.threshold for cp in self.dfa.atoms]
        return self.dfa.step(self.dfa.initial, truth)

    def vertex_products(self, x0: Sequence[int], q: int) -> tuple[np.ndarray, np.ndarray]:
        """Vertices labelled ``q`` and the product of their agent values at ``x0``."""
        alive = np.flatnonzero(self.z_alive.view)
        sel = alive[self.z_source.view[alive] == q]
        prod = np.ones(len(sel))
        R = self.R.view[sel]
        for i, s in enumerate(x0):
            prod *= self.values.data[R[:, i], s]
        return sel, prod

    def bound(self, x0: Sequence[int]) -> float:
        """Lower bound on the probability of satisfying the formula from ``x0``."""
        x0 = [int(s) for s in x0]
        if len(x0) != self.n_agents:
            raise TreeError(f"expected {self.n_agents} initial states")
        sink = self.mdp.sink
        for s in x0:
            if not 0 <= s < self.mdp.n_states:
                raise TreeError(f"invalid state {s}")
            if sink is not None and s == sink:
                raise TreeError("initial state lies in the out-of-domain sink")
        q0 = self.initial_dfa_state(x0)
        if q0 == self.dfa.accepting:
            return 1.0
        _, prod = self.vertex_products(x0, q0)
        total = float(np.sum(prod))
        assert -1e-12 <= total <= 1.0 + 1e-9, total
        return min(max(total, 0.0), 1.0)

    def witness_path(self, z: int) -> list[int]:
        """Cube ids along the path from ``z`` up to the root (first letter first)."""
        path = []
        while z != self.root:
            path.append(int(self.z_cube.data[z]))
            z = int(self.z_parent.data[z])
        return path


@dataclass
class TreeRun:
    tree: DualTree
    history: list = field(default_factory=list)
    seconds: float = 0.0

    def bound(self, x0) -> float:
        return self.tree.bound(x0)


def run_tree(
    mdp: SingleAgentMdp,
    dfa: Dfa,
    cubes,
    n_agents: int,
    horizon: int,
    strategy,
    theta_product: float = 0.0,
    theta_single: float = 0.0,
    dedup: bool = True,
    optimize: bool = False,
    sweeps: int = 1,
    edges: str = "tree",
    max_vectors: Optional[int] = None,
) -> TreeRun:
    """Run ``horizon`` rounds of (optimize), then grow, value update and prune.

    With ``optimize`` the strategy object is updated in place before each
    growth step.
    """
    from .policy import optimize_policies

    t0 = time.perf_counter()
    tree = DualTree(mdp, dfa, cubes, n_agents, dedup=dedup, max_vectors=max_vectors)
    history = []
    for _ in range(horizon):
        if optimize:
            optimize_policies(tree, strategy, sweeps=sweeps, edges=edges)
        _, pruned = tree.step(strategy, theta_product, theta_single)
        st = tree.stats(pruned)
        history.append(st)
        tree.history.append(st)
    return TreeRun(tree, history, time.perf_counter() - t0)
