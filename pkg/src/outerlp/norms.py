"""Sizes, super-level measures and iterated outer L^p quasi-norms.

Everything is computed on the support of ``f``: a set that meets the zero set
of ``f`` can be shrunk without changing the norm of ``f`` on it, and a removed
set can be intersected with the support without becoming more expensive.
Within the support we keep full tables indexed by local bitmasks.

The super-level measure of a level with sizes ``size`` and measure ``m`` is

    m(lam) = min { m(S \\ Y) : Y subset of S, maxsize(Y) <= lam },

with ``maxsize(Y)`` the largest size of a nonempty subset of ``Y``. It is a
right-continuous step function that only jumps at values of ``maxsize``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .space import CapacityError, FiniteSpace, InputError, iter_bits

INF = math.inf
# Slack used whenever a computed size is compared with a level. Sizes that are
# mathematically equal can differ in the last few bits after pow().
RTOL = 1e-12


def inv(x: float) -> float:
    return 0.0 if x == INF else 1.0 / x


def gt(a: float, level: float) -> bool:
    """``a > level`` up to rounding."""
    return a > level * (1.0 + RTOL)


def le(a: float, level: float) -> bool:
    return not gt(a, level)


@dataclass(frozen=True)
class SizeExpr:
    """``Inner(r)`` is l^r_omega, ``Outer(q, r)`` is l^q_nu(l^r_omega)."""

    r: float
    q: float | None = None

    def __post_init__(self):
        for e in (self.r, self.q):
            if e is not None and not (e > 0):
                raise InputError(f"exponents must be positive, got {e}")

    @property
    def outer(self) -> bool:
        return self.q is not None

    def __str__(self) -> str:
        if self.q is None:
            return f"l^{self.r:g}"
        return f"l^{self.q:g}_nu(l^{self.r:g})"


def Inner(r) -> SizeExpr:
    return SizeExpr(float(r))


def Outer(q, r) -> SizeExpr:
    return SizeExpr(float(r), float(q))


@dataclass(frozen=True)
class StepProfile:
    """Right-continuous step function lam -> super-level measure.

    ``plateaus[i]`` holds on ``[breakpoints[i-1], breakpoints[i])`` with an
    implicit leading breakpoint 0; the last plateau is 0.
    """

    breakpoints: tuple[float, ...]
    plateaus: tuple[Fraction, ...]
    optimal_sets: tuple[int, ...]

    def at(self, lam: float) -> Fraction:
        if not self.plateaus:
            return Fraction(0)
        idx = int(np.searchsorted(np.asarray(self.breakpoints), lam * (1 + RTOL), side="right"))
        return self.plateaus[idx]

    def to_json(self) -> dict:
        return {
            "breakpoints": list(self.breakpoints),
            "plateaus": [str(v) for v in self.plateaus],
            "optimalSets": [hex(b) for b in self.optimal_sets],
        }


@dataclass(frozen=True)
class NormResult:
    value: float
    profile: StepProfile | None = None

    def to_json(self) -> dict:
        out = {"value": self.value}
        if self.profile is not None:
            prof = self.profile.to_json()
            out["breakpoints"] = prof["breakpoints"]
            out["plateaus"] = prof["plateaus"]
        return out


def as_function(space: FiniteSpace, f) -> np.ndarray:
    arr = np.asarray(f, dtype=float).reshape(-1)
    if arr.shape[0] != space.n:
        raise InputError(f"function has {arr.shape[0]} values, space has {space.n} points")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InputError("function values must be finite and nonnegative")
    return arr


def subset_max(values: np.ndarray, k: int) -> np.ndarray:
    """out[Y] = max over submasks of Y (including Y) of values."""
    out = values.copy()
    for i in range(k):
        view = out.reshape(-1, 2, 1 << i)
        np.maximum(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])
    return out


def subset_sum(terms: np.ndarray) -> np.ndarray:
    """out[a] = sum of terms[i] over bits i of a."""
    k = len(terms)
    out = np.zeros(1 << k)
    for i in range(k):
        out.reshape(-1, 2, 1 << i)[:, 1, :] += terms[i]
    return out


@dataclass
class Level:
    """Sizes of one level together with the measure used to remove sets."""

    size: np.ndarray
    maxsize: np.ndarray
    cost: np.ndarray
    cost_exact: Sequence[Fraction]
    order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.order = np.argsort(self.maxsize, kind="stable")

    def scan(self, region: int):
        """Sorted (maxsize, cost) pairs over all ``Y`` inside ``region``."""
        ys = self.order[(self.order & ~region) == 0]
        return ys, self.maxsize[ys], self.cost[region ^ ys]

    def integral(self, region: int, p: float) -> float:
        """(int p lam^{p-1} m(lam) dlam) over the region, not yet raised to 1/p."""
        if p == INF:
            return float(self.maxsize[region])
        _, vals, costs = self.scan(region)
        run = np.minimum.accumulate(costs)
        powv = vals**p
        return float(np.sum(run[:-1] * np.diff(powv)))

    def norm(self, region: int, p: float) -> float:
        if region == 0:
            return 0.0
        if p == INF:
            return float(self.maxsize[region])
        return self.integral(region, p) ** (1.0 / p)

    def measure_at(self, region: int, lam: float) -> float:
        _, vals, costs = self.scan(region)
        cut = int(np.searchsorted(vals, lam * (1 + RTOL), side="right"))
        return float(np.min(costs[:cut]))

    def measure_exact(self, region: int, lam: float) -> Fraction:
        """Exact super-level measure at ``lam`` of the function restricted to ``region``."""
        if region == 0:
            return Fraction(0)
        ys, vals, _ = self.scan(region)
        cut = int(np.searchsorted(vals, lam * (1 + RTOL), side="right"))
        return min(self.cost_exact[region ^ int(y)] for y in ys[:cut])

    def argmax(self, region: int) -> int:
        """Nonempty submask of ``region`` with the largest size, smallest mask on ties."""
        cands = np.arange(1, self.size.shape[0])
        cands = cands[(cands & ~region) == 0]
        if cands.size == 0:
            return 0
        return int(cands[int(np.argmax(self.size[cands]))])


class NormEngine:
    """Tables for one function on one space, shared by all levels and exponents."""

    def __init__(self, space: FiniteSpace, f, exact_limit: int | None = None):
        self.space = space
        self.f = as_function(space, f)
        self.support = [int(i) for i in np.nonzero(self.f > 0)[0]]
        self.k = len(self.support)
        limit = exact_limit if exact_limit is not None else space.exact_limit
        if self.k > limit:
            raise CapacityError(
                f"function support has {self.k} points, exact-mode limit is {limit}"
            )
        self.full = (1 << self.k) - 1
        glob = [0] * (1 << self.k)
        for a in range(1, 1 << self.k):
            low = (a & -a).bit_length() - 1
            glob[a] = glob[a & (a - 1)] | (1 << self.support[low])
        self.glob = glob
        self._levels: dict = {}

    # -- masks ----------------------------------------------------------------

    @cached_property
    def _pos(self) -> dict[int, int]:
        return {g: i for i, g in enumerate(self.support)}

    def local(self, gmask: int) -> int:
        out = 0
        pos = self._pos
        for i in iter_bits(gmask):
            if i in pos:
                out |= 1 << pos[i]
        return out

    def to_global(self, lmask: int) -> int:
        return self.glob[lmask]

    @property
    def support_mask(self) -> int:
        return self.glob[self.full]

    # -- measures ---------------------------------------------------------------

    def _exact(self, which: str) -> list[Fraction]:
        sp = self.space
        if sp.has_table():
            vals = sp.table(which).values
            return [vals[g] for g in self.glob]
        return [sp.measure(which, g) for g in self.glob]

    @cached_property
    def mu_exact(self) -> list[Fraction]:
        return self._exact("mu")

    @cached_property
    def nu_exact(self) -> list[Fraction]:
        return self._exact("nu")

    @cached_property
    def mu(self) -> np.ndarray:
        return np.array([float(v) for v in self.mu_exact])

    @cached_property
    def nu(self) -> np.ndarray:
        return np.array([float(v) for v in self.nu_exact])

    @cached_property
    def fs(self) -> np.ndarray:
        return self.f[self.support]

    @cached_property
    def ws(self) -> np.ndarray:
        return self.space.omega_float[self.support]

    # -- levels -------------------------------------------------------------------

    def inner(self, r: float) -> Level:
        key = ("in", float(r))
        if key not in self._levels:
            if self.k == 0:
                size = np.zeros(1)
            elif r == INF:
                size = np.zeros(1 << self.k)
                for i, v in enumerate(self.fs):
                    view = size.reshape(-1, 2, 1 << i)
                    np.maximum(view[:, 1, :], v, out=view[:, 1, :])
            else:
                mass = subset_sum(self.fs**r * self.ws)
                with np.errstate(divide="ignore", invalid="ignore"):
                    size = np.where(self.nu > 0, (mass / np.where(self.nu > 0, self.nu, 1)) ** (1.0 / r), 0.0)
                size[0] = 0.0
            self._levels[key] = Level(size, subset_max(size, self.k), self.nu, self.nu_exact)
        return self._levels[key]

    def inner_norms(self, q: float, r: float) -> np.ndarray:
        """||f 1_C||_{L^q_nu(l^r)} for every local mask C."""
        key = ("N", float(q), float(r))
        if key not in self._levels:
            lev = self.inner(r)
            out = np.zeros(1 << self.k)
            for c in range(1, 1 << self.k):
                out[c] = lev.norm(c, q)
            self._levels[key] = out
        return self._levels[key]

    def outer(self, q: float, r: float) -> Level:
        key = ("out", float(q), float(r))
        if key not in self._levels:
            norms = self.inner_norms(q, r)
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(self.mu > 0, self.mu, 1.0) ** (-inv(q))
            size = norms * scale
            size[0] = 0.0
            self._levels[key] = Level(size, subset_max(size, self.k), self.mu, self.mu_exact)
        return self._levels[key]

    def level(self, s: SizeExpr) -> Level:
        return self.outer(s.q, s.r) if s.outer else self.inner(s.r)

    # -- profiles -------------------------------------------------------------------

    def profile(self, s: SizeExpr, region: int | None = None) -> StepProfile:
        """Exact step profile; plateau values are exact, breakpoints binary64."""
        region = self.full if region is None else region
        if region == 0:
            return StepProfile((), (), ())
        lev = self.level(s)
        ys, vals, _ = lev.scan(region)
        exact = lev.cost_exact
        bps: list[float] = []
        plats: list[Fraction] = []
        sets: list[int] = []
        best = None
        best_b = None
        i = 0
        nvals = len(vals)
        while i < nvals:
            j = i
            # merge candidates equal up to rounding into one breakpoint
            while j + 1 < nvals and vals[j + 1] <= vals[i] * (1 + RTOL):
                j += 1
            for t in range(i, j + 1):
                b = self.glob[region ^ int(ys[t])]
                c = exact[region ^ int(ys[t])]
                if best is None or c < best or (c == best and b < best_b):
                    best, best_b = c, b
            if not plats:
                plats.append(best)
                sets.append(best_b)
            elif best != plats[-1]:
                bps.append(float(vals[i]))
                plats.append(best)
                sets.append(best_b)
            else:
                sets[-1] = best_b if best_b < sets[-1] and best == plats[-1] else sets[-1]
            i = j + 1
        return StepProfile(tuple(bps), tuple(plats), tuple(sets))

    def super_level(self, s: SizeExpr, lam: float, region: int | None = None) -> tuple[Fraction, int]:
        region = self.full if region is None else region
        if region == 0:
            return Fraction(0), 0
        lev = self.level(s)
        ys, vals, _ = lev.scan(region)
        cut = int(np.searchsorted(vals, lam * (1 + RTOL), side="right"))
        best = None
        best_b = 0
        for y in ys[:cut]:
            rest = region ^ int(y)
            c = lev.cost_exact[rest]
            b = self.glob[rest]
            if best is None or c < best or (c == best and b < best_b):
                best, best_b = c, b
        return best, best_b

    def norm(self, p: float, s: SizeExpr, region: int | None = None) -> float:
        region = self.full if region is None else region
        return self.level(s).norm(region, p)


# -- public operations -------------------------------------------------------------


def engine_for(space: FiniteSpace, f, engine: NormEngine | None = None) -> NormEngine:
    if engine is not None:
        return engine
    return NormEngine(space, f)


def size_eval(space: FiniteSpace, f, A: int, s: SizeExpr, engine: NormEngine | None = None) -> float:
    """Size of ``f`` on the nonempty set ``A``."""
    if A == 0:
        raise InputError("size of the empty set is undefined")
    if A & ~space.full:
        raise InputError("mask outside the ground set")
    eng = engine_for(space, f, engine)
    if not s.outer:
        vals = eng.f[list(iter_bits(A))]
        if s.r == INF:
            return float(vals.max()) if vals.size else 0.0
        w = space.omega_float[list(iter_bits(A))]
        mass = float(np.sum(vals**s.r * w))
        return (mass / float(space.measure("nu", A))) ** (1.0 / s.r)
    inner = eng.inner_norms(s.q, s.r)[eng.local(A)]
    return float(inner) * float(space.measure("mu", A)) ** (-inv(s.q))


def super_level_measure(
    space: FiniteSpace, f, s: SizeExpr, lam: float, engine: NormEngine | None = None
) -> tuple[Fraction, int]:
    """Cheapest set whose removal leaves every size at most ``lam``."""
    if lam < 0:
        raise InputError("level must be nonnegative")
    return engine_for(space, f, engine).super_level(s, lam)


def step_profile(space: FiniteSpace, f, s: SizeExpr, engine: NormEngine | None = None) -> StepProfile:
    return engine_for(space, f, engine).profile(s)


def outer_norm(
    space: FiniteSpace,
    f,
    p: float,
    s: SizeExpr,
    engine: NormEngine | None = None,
    with_profile: bool = True,
) -> NormResult:
    if not p > 0:
        raise InputError("p must be positive")
    eng = engine_for(space, f, engine)
    value = eng.norm(float(p), s)
    prof = eng.profile(s) if (with_profile and p != INF) else None
    return NormResult(value, prof)


def classical_lp(space: FiniteSpace, f, r: float) -> float:
    arr = as_function(space, f)
    if r == INF:
        return float(arr.max())
    return float(np.sum(arr**r * space.omega_float)) ** (1.0 / r)


@dataclass(frozen=True)
class DiscretizedBounds:
    """Dyadic-level sums for ``||f||^p`` and the factors that sandwich it.

    ``single = sum_k psi^{kp} m(psi^k)`` and ``double = sum_k psi^{kp}
    sum_{l>=k} m(psi^l)``. With a = 1 - psi^{-p}:

        a * single <= ||f||^p <= (psi^p - 1) * single,
        double = single / a.
    """

    single: float
    double: float
    psi: float
    p: float

    @property
    def single_factors(self) -> tuple[float, float]:
        return 1.0 - self.psi ** (-self.p), self.psi**self.p - 1.0

    @property
    def double_factors(self) -> tuple[float, float]:
        a = 1.0 - self.psi ** (-self.p)
        return a * a, (self.psi**self.p - 1.0) * a


def discretized_norm_bounds(
    space: FiniteSpace, f, p: float, s: SizeExpr, psi: float, engine: NormEngine | None = None
) -> DiscretizedBounds:
    """Both discrete level sums, with the saturated tail summed in closed form."""
    if not psi > 1:
        raise InputError("psi must exceed 1")
    if p == INF or not p > 0:
        raise InputError("p must be finite and positive")
    eng = engine_for(space, f, engine)
    if eng.k == 0:
        return DiscretizedBounds(0.0, 0.0, psi, p)
    prof = eng.profile(s)
    top = max(prof.breakpoints)
    bottom = min(prof.breakpoints)
    k_hi = math.ceil(math.log(top, psi)) + 1
    k_lo = math.floor(math.log(bottom, psi)) - 1
    m0 = float(prof.plateaus[0])
    x = psi ** (-p)
    a = 1.0 - x
    ms = [float(prof.at(psi**k)) for k in range(k_lo, k_hi + 1)]
    # below k_lo the profile is saturated at m(0); geometric tails in closed form
    single = m0 * psi ** ((k_lo - 1) * p) / a
    single += sum(psi ** (k * p) * m for k, m in zip(range(k_lo, k_hi + 1), ms))
    total = sum(ms)
    double = total * psi ** ((k_lo - 1) * p) / a + m0 * psi ** (k_lo * p) * x / a**2
    tail = total
    for k, m in zip(range(k_lo, k_hi + 1), ms):
        double += psi ** (k * p) * tail
        tail -= m
    return DiscretizedBounds(single, double, psi, p)
