"""Brute-force reference values, written straight from the definitions.

Nothing here shares code with the engines in ``space`` and ``norms``: measures
come from enumerating every subcollection of generators, and super-level
measures from enumerating every removed set ``B`` together with every test
set ``A`` of the whole ground set. Only meant for n <= 6 or so.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

INF = math.inf


def cover_values(n: int, gens) -> list[Fraction]:
    """Cheapest cover of every subset, by enumerating all subcollections."""
    best = [None] * (1 << n)
    gens = list(gens)
    for size in range(len(gens) + 1):
        for combo in itertools.combinations(range(len(gens)), size):
            union = 0
            cost = Fraction(0)
            for i in combo:
                union |= gens[i][0]
                cost += Fraction(gens[i][1])
            for a in range(1 << n):
                if a & ~union == 0 and (best[a] is None or cost < best[a]):
                    best[a] = cost
    return best


class Oracle:
    """Definition-level evaluator for one space."""

    def __init__(self, space):
        self.n = space.n
        self.omega = [float(w) for w in space.omega]
        self.mu = cover_values(self.n, space.mu_gen)
        self.nu = cover_values(self.n, space.nu_gen)
        self._memo: dict = {}

    def _subsets(self):
        return range(1 << self.n)

    def _restrict(self, h, keep: int):
        return tuple(v if keep >> i & 1 else 0.0 for i, v in enumerate(h))

    def inner_size(self, h, a: int, r: float) -> float:
        pts = [i for i in range(self.n) if a >> i & 1]
        if r == INF:
            return max(h[i] for i in pts)
        s = sum(h[i] ** r * self.omega[i] for i in pts)
        return (s / float(self.nu[a])) ** (1.0 / r)

    def sup_inner(self, h, r: float) -> float:
        return max(self.inner_size(h, a, r) for a in range(1, 1 << self.n))

    def _integrate(self, pairs, p: float) -> float:
        """Norm from (I_B, cost_B) pairs: m(lam) = min cost over I_B <= lam."""
        if p == INF:
            return min(i for i, c in pairs if c == 0)
        levels = sorted({i for i, _ in pairs})
        total = 0.0
        for lo, hi in zip(levels, levels[1:]):
            m = min(float(c) for i, c in pairs if i <= lo)
            total += m * (hi**p - lo**p)
        return total ** (1.0 / p)

    def single_pairs(self, h, r: float):
        full = (1 << self.n) - 1
        return [(self.sup_inner(self._restrict(h, full ^ b), r), self.nu[b]) for b in self._subsets()]

    def single_norm(self, h, q: float, r: float) -> float:
        """||h||_{L^q_nu(l^r_omega)}."""
        key = ("single", h, q, r)
        if key not in self._memo:
            if not any(h):
                self._memo[key] = 0.0
            else:
                self._memo[key] = self._integrate(self.single_pairs(h, r), q)
        return self._memo[key]

    def outer_size(self, h, a: int, q: float, r: float) -> float:
        inner = self.single_norm(self._restrict(h, a), q, r)
        scale = 1.0 if q == INF else float(self.mu[a]) ** (-1.0 / q)
        return inner * scale

    def sup_outer(self, h, q: float, r: float) -> float:
        return max(self.outer_size(h, a, q, r) for a in range(1, 1 << self.n))

    def double_pairs(self, h, q: float, r: float):
        full = (1 << self.n) - 1
        return [(self.sup_outer(self._restrict(h, full ^ b), q, r), self.mu[b]) for b in self._subsets()]

    def double_norm(self, h, p: float, q: float, r: float) -> float:
        """||h||_{L^p_mu(l^q_nu(l^r_omega))}."""
        if not any(h):
            return 0.0
        return self._integrate(self.double_pairs(h, q, r), p)

    @staticmethod
    def level_measure(pairs, lam: float) -> Fraction:
        return min(c for i, c in pairs if i <= lam * (1 + 1e-12))
