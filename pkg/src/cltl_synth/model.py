"""Single-agent finite MDPs and the grid abstraction of a 1-D integrator.

The abstraction of ``x+ = x + u + w`` with ``w ~ N(0, sigma^2)`` uses a
uniform grid of cells, each represented by its centre, a uniform action grid
and one extra absorbing sink that collects the probability of leaving the
domain. Labels are attached to cells whose centre lies in ``[lo, hi)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import ndtr

ROW_TOL = 1e-12


class ModelError(ValueError):
    pass


@dataclass
class SingleAgentMdp:
    kernel: np.ndarray  # (states, actions, states)
    labels: list  # frozenset of proposition names per state
    props: tuple
    initial_states: Optional[list] = None
    representatives: Optional[np.ndarray] = None
    action_values: Optional[np.ndarray] = None
    grid: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=float)
        if self.kernel.ndim != 3 or self.kernel.shape[0] != self.kernel.shape[2]:
            raise ModelError(f"kernel must have shape (S, A, S), got {self.kernel.shape}")
        if np.any(self.kernel < 0):
            raise ModelError("negative transition probability")
        rows = self.kernel.sum(axis=2)
        if np.max(np.abs(rows - 1.0)) > ROW_TOL:
            raise ModelError("kernel rows must sum to one")
        self.labels = [frozenset(l) for l in self.labels]
        if len(self.labels) != self.n_states:
            raise ModelError("one label set per state required")
        self.props = tuple(self.props)
        for l in self.labels:
            if not l <= set(self.props):
                raise ModelError(f"label {set(l)} uses undeclared propositions")
        self.label_bits = np.array(
            [[p in l for p in self.props] for l in self.labels], dtype=bool
        ).reshape(self.n_states, len(self.props))

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernel.shape[1]

    @property
    def sink(self) -> Optional[int]:
        """Index of the out-of-domain sink for grid models."""
        return None if self.grid is None else int(self.grid["n_states"])

    def policy_matrix(self, policy: np.ndarray) -> np.ndarray:
        """Transition matrix of the chain closed under a state -> action map."""
        return self.kernel[np.arange(self.n_states), policy]

    def state_of(self, x: float) -> int:
        """Grid cell containing the continuous coordinate ``x`` (sink if outside)."""
        if self.grid is None:
            raise ModelError("model has no grid; pass state indices instead")
        lo, hi, n = self.grid["x_lo"], self.grid["x_hi"], self.grid["n_states"]
        if not lo <= x < hi:
            return n
        width = (hi - lo) / n
        # tolerance keeps grid-aligned inputs such as -1.8 in the upper cell
        return min(int(np.floor((x - lo) / width + 1e-9)), n - 1)

    # serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        s, a = self.n_states, self.n_actions
        return {
            "n_states": s,
            "n_actions": a,
            "props": list(self.props),
            "kernel": self.kernel.reshape(-1).tolist(),
            "labels": [sorted(l) for l in self.labels],
            "initial_states": self.initial_states,
            "representatives": None if self.representatives is None else self.representatives.tolist(),
            "action_values": None if self.action_values is None else self.action_values.tolist(),
            "grid": self.grid,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SingleAgentMdp":
        try:
            s, a = int(d["n_states"]), int(d["n_actions"])
            kernel = np.asarray(d["kernel"], dtype=float).reshape(s, a, s)
        except (KeyError, ValueError) as exc:
            raise ModelError(f"malformed MDP document: {exc}") from exc
        reps = d.get("representatives")
        acts = d.get("action_values")
        return cls(
            kernel=kernel,
            labels=d["labels"],
            props=d["props"],
            initial_states=d.get("initial_states"),
            representatives=None if reps is None else np.array([np.nan if r is None else r for r in reps]),
            action_values=None if acts is None else np.asarray(acts, dtype=float),
            grid=d.get("grid"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SingleAgentMdp":
        return cls.from_dict(json.loads(Path(path).read_text()))


def abstract_1d_gaussian(
    x_lo: float = -10.0,
    x_hi: float = 10.0,
    n_states: int = 100,
    u_lo: float = -2.0,
    u_hi: float = 2.0,
    n_actions: int = 21,
    noise_std: float = 1.0,
    labels: Optional[Mapping[str, Sequence]] = None,
    props: Optional[Sequence[str]] = None,
) -> SingleAgentMdp:
    """Grid abstraction of ``x+ = x + u + w``.

    ``labels`` maps a proposition to one interval ``(lo, hi)`` or a list of
    intervals. The returned model has ``n_states + 1`` states; the last one is
    the unlabeled out-of-domain sink.
    """
    if not x_lo < x_hi:
        raise ModelError("empty state interval")
    if n_states < 2 or n_actions < 1:
        raise ModelError("need at least two cells and one action")
    if not noise_std > 0:
        raise ModelError("noise_std must be positive")
    if u_lo > u_hi:
        raise ModelError("empty action interval")
    labels = dict(labels or {})
    props = tuple(props) if props is not None else tuple(sorted(labels))
    if not set(labels) <= set(props):
        raise ModelError("labelled proposition missing from props")

    edges = np.linspace(x_lo, x_hi, n_states + 1)
    centres = 0.5 * (edges[:-1] + edges[1:])
    actions = np.linspace(u_lo, u_hi, n_actions) if n_actions > 1 else np.array([0.5 * (u_lo + u_hi)])

    mean = centres[:, None] + actions[None, :]  # (S, A)
    z = (edges[None, None, :] - mean[:, :, None]) / noise_std
    cdf = ndtr(z)  # (S, A, n+1)
    cells = np.diff(cdf, axis=2)
    np.clip(cells, 0.0, None, out=cells)
    kernel = np.zeros((n_states + 1, n_actions, n_states + 1))
    kernel[:n_states, :, :n_states] = cells
    kernel[:n_states, :, n_states] = np.clip(1.0 - cells.sum(axis=2), 0.0, None)
    kernel[n_states, :, n_states] = 1.0

    state_labels = [set() for _ in range(n_states + 1)]
    for p, spec in labels.items():
        intervals = [spec] if np.isscalar(spec[0]) else list(spec)
        for lo, hi in intervals:
            if not lo < hi:
                raise ModelError(f"invalid interval for {p!r}: [{lo}, {hi})")
            for s in np.nonzero((centres >= lo) & (centres < hi))[0]:
                state_labels[s].add(p)

    grid = {"x_lo": x_lo, "x_hi": x_hi, "n_states": n_states}
    reps = np.append(centres, np.nan)
    return SingleAgentMdp(kernel, state_labels, props, None, reps, actions, grid)


def joint_label(states: Sequence[int], mdp: SingleAgentMdp) -> tuple:
    return tuple(mdp.labels[s] for s in states)
