"""A minimal reduced ordered BDD with a fixed variable order.

Node ids 0 and 1 are the terminals. Variable ``i`` sits at level ``i``.
"""
from __future__ import annotations

from typing import Iterator


class BddManager:
    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        # terminals carry level n_vars so they sort below every variable
        self._var = [n_vars, n_vars]
        self._lo = [0, 1]
        self._hi = [0, 1]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._ite_cache: dict[tuple[int, int, int], int] = {}

    FALSE = 0
    TRUE = 1

    def __len__(self) -> int:
        return len(self._var)

    def node(self, u: int) -> tuple[int, int, int]:
        return self._var[u], self._lo[u], self._hi[u]

    def mk(self, var: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (var, lo, hi)
        u = self._unique.get(key)
        if u is None:
            u = len(self._var)
            self._var.append(var)
            self._lo.append(lo)
            self._hi.append(hi)
            self._unique[key] = u
        return u

    def var(self, i: int) -> int:
        if not 0 <= i < self.n_vars:
            raise IndexError(f"variable {i} out of range")
        return self.mk(i, 0, 1)

    def ite(self, f: int, g: int, h: int) -> int:
        if f == 1:
            return g
        if f == 0:
            return h
        if g == h:
            return g
        if g == 1 and h == 0:
            return f
        key = (f, g, h)
        r = self._ite_cache.get(key)
        if r is not None:
            return r
        v = min(self._var[f], self._var[g], self._var[h])
        f0, f1 = self._cofactors(f, v)
        g0, g1 = self._cofactors(g, v)
        h0, h1 = self._cofactors(h, v)
        r = self.mk(v, self.ite(f0, g0, h0), self.ite(f1, g1, h1))
        self._ite_cache[key] = r
        return r

    def _cofactors(self, u: int, v: int) -> tuple[int, int]:
        if self._var[u] == v:
            return self._lo[u], self._hi[u]
        return u, u

    def neg(self, u: int) -> int:
        return self.ite(u, 0, 1)

    def conj(self, u: int, v: int) -> int:
        return self.ite(u, v, 0)

    def disj(self, u: int, v: int) -> int:
        return self.ite(u, 1, v)

    def threshold(self, variables: list[int], m: int) -> int:
        """At least ``m`` of ``variables`` are true."""
        if m <= 0:
            return 1
        if m > len(variables):
            return 0
        order = sorted(variables)
        # dp[c] = node for "at least m true among the remaining, given c seen"
        nxt = [1 if c >= m else 0 for c in range(m + 1)]
        for v in reversed(order):
            cur = []
            for c in range(m + 1):
                cur.append(self.mk(v, nxt[c], nxt[min(c + 1, m)]))
            nxt = cur
        return nxt[0]

    def satcount(self, u: int) -> int:
        memo: dict[int, int] = {}

        def count(w: int) -> int:
            # models over variables at levels >= level(w)
            if w <= 1:
                return w
            if w in memo:
                return memo[w]
            var, lo, hi = self.node(w)
            r = (count(lo) << (self._var[lo] - var - 1)) + (count(hi) << (self._var[hi] - var - 1))
            memo[w] = r
            return r

        return count(u) << self._var[u]

    def paths(self, u: int) -> Iterator[dict[int, bool]]:
        """Enumerate 1-paths as partial assignments, low branch first."""
        if u == 0:
            return
        stack = [(u, {})]
        while stack:
            w, partial = stack.pop()
            if w == 1:
                yield partial
                continue
            if w == 0:
                continue
            var, lo, hi = self.node(w)
            stack.append((hi, {**partial, var: True}))
            stack.append((lo, {**partial, var: False}))

    def evaluate(self, u: int, assignment) -> bool:
        while u > 1:
            var, lo, hi = self.node(u)
            u = hi if assignment[var] else lo
        return u == 1

    def size(self, u: int) -> int:
        seen = set()
        stack = [u]
        while stack:
            w = stack.pop()
            if w in seen:
                continue
            seen.add(w)
            if w > 1:
                stack.extend((self._lo[w], self._hi[w]))
        return len(seen)
