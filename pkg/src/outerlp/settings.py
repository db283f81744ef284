"""Concrete spaces: three measures, cartesian products and the blow-up families."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .conditions import CoveringFunctionSpec, singleton_spec, slab_spec
from .space import FiniteSpace, InputError, to_fraction


@dataclass
class Setting:
    """A space together with a covering function and its parameters."""

    space: FiniteSpace
    covering: CoveringFunctionSpec | None = None
    K: Fraction = Fraction(1)
    kind: str = ""
    params: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    @property
    def phi(self) -> Fraction:
        return self.covering.phi if self.covering is not None else Fraction(1)


def _rationals(rng: random.Random, count: int, denominators=(1, 2, 3, 4)) -> list[Fraction]:
    out = []
    for _ in range(count):
        d = rng.choice(denominators)
        out.append(Fraction(rng.randint(1, 4 * d), d))
    return out


def make_three_measures(n: int, seed: int) -> Setting:
    """Three independent measures on n points; every covering is by singletons."""
    if n < 1:
        raise InputError("n must be positive")
    rng = random.Random(seed)
    omega, sigma, tau = (_rationals(rng, n) for _ in range(3))
    space = FiniteSpace(
        tuple(range(n)),
        omega,
        [(1 << i, s) for i, s in enumerate(sigma)],
        [(1 << i, t) for i, t in enumerate(tau)],
        name=f"three-measures-{n}-{seed}",
    )
    return Setting(space, singleton_spec(space), Fraction(1), "threeMeasures", {"n": n, "seed": seed})


def make_cartesian(sizes: Sequence[int], weights: Sequence[Sequence] | None = None, seed: int = 0) -> Setting:
    """Product X1 x X2 x X3 with omega the product measure, nu covered by
    fibres X1 x {(y, z)} and mu covered by slabs X1 x X2 x {z}."""
    if len(sizes) != 3 or min(sizes) < 1:
        raise InputError("sizes must be three positive integers")
    rng = random.Random(seed)
    if weights is None:
        weights = [_rationals(rng, s) for s in sizes]
    weights = [[to_fraction(w) for w in ws] for ws in weights]
    if [len(w) for w in weights] != list(sizes):
        raise InputError("weights do not match sizes")
    w1, w2, w3 = weights
    points = list(itertools.product(range(sizes[0]), range(sizes[1]), range(sizes[2])))
    index = {p: i for i, p in enumerate(points)}
    omega = [w1[a] * w2[b] * w3[c] for a, b, c in points]
    fibres = []
    for b in range(sizes[1]):
        for c in range(sizes[2]):
            mask = sum(1 << index[(a, b, c)] for a in range(sizes[0]))
            fibres.append((mask, w2[b] * w3[c]))
    slabs = []
    for c in range(sizes[2]):
        mask = sum(1 << index[p] for p in points if p[2] == c)
        slabs.append((mask, w3[c]))
    space = FiniteSpace(tuple(points), omega, slabs, fibres, name=f"cartesian-{sizes}-{seed}")
    return Setting(
        space,
        slab_spec(space, [m for m, _ in slabs]),
        Fraction(1),
        "cartesian",
        {"sizes": list(sizes), "seed": seed},
    )


def make_counterexample_first(m: int) -> Setting:
    """omega and mu counting measure, nu(A) = 1 for every nonempty A."""
    if m < 1:
        raise InputError("m must be positive")
    full = (1 << m) - 1
    space = FiniteSpace(
        tuple(range(m)),
        [1] * m,
        [(1 << i, 1) for i in range(m)],
        [(full, 1)],
        name=f"first-family-{m}",
    )
    ref = {
        "inner_norm": lambda r: m ** (1.0 / r),
        "double_norm_p1_q1": lambda r: float(m),
        "double_norm": lambda p, q, r: first_family_closed_form(m, p, q, r),
        "caratheodory_K": m,
    }
    return Setting(space, singleton_spec(space), Fraction(1), "ce1", {"m": m}, ref)


def first_family_closed_form(m: int, p: float, q: float, r: float) -> float:
    """||1_X||_{L^p_mu(l^q_nu(l^r))} for 1 <= r <= q < inf.

    The outer size of 1_A is |A|^alpha with alpha = 1/r - 1/q, so the profile
    is m - i + 1 on [(i-1)^alpha, i^alpha) and the norm^p is sum_i i^{alpha p}.
    """
    alpha = 1.0 / r - 1.0 / q
    if p == math.inf:
        return m**alpha
    return sum(i ** (alpha * p) for i in range(1, m + 1)) ** (1.0 / p)


def make_counterexample_second(m: int, r) -> Setting:
    """nu = 1 on nonempty sets, omega counting, mu from singletons 2^{beta(i-1)}, beta = 2/r."""
    r = Fraction(r)
    if not 0 < r <= 1:
        raise InputError("second family needs 0 < r <= 1")
    if m < 1:
        raise InputError("m must be positive")
    beta = 2 / r
    if beta.denominator != 1:
        raise InputError("2/r must be an integer so that pre-measures stay rational")
    beta = int(beta)
    full = (1 << m) - 1
    space = FiniteSpace(
        tuple(range(m)),
        [1] * m,
        [(1 << i, Fraction(2) ** (beta * i)) for i in range(m)],
        [(full, 1)],
        name=f"second-family-{m}-{r}",
    )
    ref = {
        "inner_norm": float(m) ** (1.0 / float(r)),
        "double_norm": second_family_closed_form(m, beta),
        "beta": beta,
    }
    return Setting(space, singleton_spec(space), Fraction(1), "ce2", {"m": m, "r": str(r)}, ref)


def second_family_closed_form(m: int, beta: int) -> float:
    """||1_X||_{L^1_mu(l^1_nu(l^r))}: plateau sum_{i<=j} 2^{beta(i-1)} below 2^{-beta(j-1)}."""
    def partial(j):
        return sum(2.0 ** (beta * (i - 1)) for i in range(1, j + 1))

    total = partial(m) * 2.0 ** (-beta * (m - 1))
    for j in range(1, m):
        total += partial(j) * (2.0 ** (-beta * (j - 1)) - 2.0 ** (-beta * j))
    return total


def second_family_bound(m: int, beta: int) -> float:
    """The geometric-sum bound (m - 1) + 2^beta / (2^beta - 1) <= C m."""
    return (m - 1) + 2.0**beta / (2.0**beta - 1)


def load_setting(desc: dict) -> Setting:
    """Build a setting from a JSON descriptor ``{"kind": ..., ...}``."""
    from .dyadic import make_dyadic_discrete

    kind = desc.get("kind")
    try:
        if kind == "threeMeasures":
            return make_three_measures(int(desc["n"]), int(desc.get("seed", 0)))
        if kind == "cartesian":
            return make_cartesian(desc["sizes"], desc.get("weights"), int(desc.get("seed", 0)))
        if kind == "ce1":
            return make_counterexample_first(int(desc["m"]))
        if kind == "ce2":
            return make_counterexample_second(int(desc["m"]), Fraction(str(desc["r"])))
        if kind == "dyadic":
            return make_dyadic_discrete(int(desc["J"]), omega=desc.get("omega", "unit"))
    except KeyError as exc:
        raise InputError(f"setting descriptor for {kind!r} lacks field {exc}") from exc
    raise InputError(f"unknown setting kind {kind!r}")
