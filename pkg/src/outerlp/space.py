"""Finite outer-measure spaces generated by pre-measures.

A space carries a positive weight ``omega`` per point and two generating
families (for mu and nu). The outer measure of a set is the cheapest cover by
generators. Values are exact ``Fraction``s.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

DEFAULT_EXACT_LIMIT = 12
WHICH = ("mu", "nu")


class InputError(ValueError):
    """Malformed or inconsistent input."""


class CapacityError(InputError):
    """The requested exact computation exceeds the configured size limit."""


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def iter_submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` including 0, in decreasing order."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def _check_which(which: str) -> str:
    if which not in WHICH:
        raise InputError(f"which must be 'mu' or 'nu', got {which!r}")
    return which


@dataclass(frozen=True)
class MeasureTable:
    """All 2^n outer-measure values of one family, as exact fractions.

    ``scaled`` holds the same values times ``denom`` as int64 so that
    vectorised comparisons stay exact.
    """

    which: str
    n: int
    values: tuple[Fraction, ...]
    denom: int
    scaled: np.ndarray = field(repr=False, compare=False)

    def __getitem__(self, mask: int) -> Fraction:
        return self.values[mask]

    def as_float(self) -> np.ndarray:
        return self.scaled.astype(float) / self.denom


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """Ground set with weights and generating families for mu and nu.

    ``evaluators`` optionally maps ``"mu"``/``"nu"`` to a fast exact evaluator
    used when the ground set is too large for a full table.
    """

    points: tuple
    omega: tuple[Fraction, ...]
    mu_gen: tuple[tuple[int, Fraction], ...]
    nu_gen: tuple[tuple[int, Fraction], ...]
    exact_limit: int = DEFAULT_EXACT_LIMIT
    name: str = ""
    evaluators: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "omega", tuple(to_fraction(w) for w in self.omega))
        object.__setattr__(
            self, "mu_gen", tuple((int(m), to_fraction(s)) for m, s in self.mu_gen)
        )
        object.__setattr__(
            self, "nu_gen", tuple((int(m), to_fraction(s)) for m, s in self.nu_gen)
        )
        n = len(self.points)
        if n == 0:
            raise InputError("empty ground set")
        if len(self.omega) != n:
            raise InputError(f"omega has {len(self.omega)} entries, expected {n}")
        if any(w <= 0 for w in self.omega):
            raise InputError("omega weights must be strictly positive")
        full = (1 << n) - 1
        for which, gens in (("mu", self.mu_gen), ("nu", self.nu_gen)):
            covered = 0
            for idx, (mask, val) in enumerate(gens):
                if mask <= 0 or mask & ~full:
                    raise InputError(f"{which} generator {idx} has invalid mask {mask:#x}")
                if val <= 0:
                    raise InputError(f"{which} generator {idx} has non-positive pre-measure")
                covered |= mask
            if covered != full:
                missing = [self.points[i] for i in iter_bits(full & ~covered)]
                raise InputError(f"{which} generators do not cover points {missing}")

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def generators(self, which: str) -> tuple[tuple[int, Fraction], ...]:
        return self.mu_gen if _check_which(which) == "mu" else self.nu_gen

    def mask_of(self, items: Iterable) -> int:
        index = self.index
        mask = 0
        for p in items:
            mask |= 1 << index[p]
        return mask

    @cached_property
    def index(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}

    def members(self, mask: int) -> list:
        return [self.points[i] for i in iter_bits(mask)]

    @cached_property
    def omega_float(self) -> np.ndarray:
        return np.array([float(w) for w in self.omega])

    # -- measures -----------------------------------------------------------

    @cached_property
    def _tables(self) -> dict:
        return {}

    def table(self, which: str) -> MeasureTable:
        which = _check_which(which)
        if which not in self._tables:
            self._tables[which] = build_measure_table(self, which)
        return self._tables[which]

    def has_table(self) -> bool:
        return self.n <= self.exact_limit

    def measure(self, which: str, mask: int) -> Fraction:
        """Exact outer measure of ``mask``."""
        which = _check_which(which)
        if mask == 0:
            return Fraction(0)
        if self.has_table():
            return self.table(which)[mask]
        if which in self.evaluators:
            return self.evaluators[which](mask)
        return self.measure_dp(which, mask)

    def measure_dp(self, which: str, mask: int) -> Fraction:
        """Lazy memoised cover search, split over connected components.

        Usable for large ground sets as long as each component restricted to
        ``mask`` stays small.
        """
        which = _check_which(which)
        comp = self.components(which)
        total = Fraction(0)
        for c in comp:
            part = mask & c
            if part:
                total += self._dp(which, part)
        return total

    @cached_property
    def _by_point(self) -> dict:
        out = {}
        for which in WHICH:
            lists = [[] for _ in range(self.n)]
            for idx, (mask, val) in enumerate(self.generators(which)):
                for i in iter_bits(mask):
                    lists[i].append((idx, mask, val))
            out[which] = lists
        return out

    @cached_property
    def _memo(self) -> dict:
        return {"mu": {0: Fraction(0)}, "nu": {0: Fraction(0)}}

    def _dp(self, which: str, mask: int) -> Fraction:
        memo = self._memo[which]
        if mask in memo:
            return memo[mask]
        # iterative deepening via an explicit stack keeps recursion shallow
        stack = [mask]
        by_point = self._by_point[which]
        while stack:
            a = stack[-1]
            if a in memo:
                stack.pop()
                continue
            low = (a & -a).bit_length() - 1
            pending = [a & ~g for _, g, _ in by_point[low] if (a & ~g) not in memo]
            if pending:
                stack.extend(pending)
                continue
            memo[a] = min(val + memo[a & ~g] for _, g, val in by_point[low])
            stack.pop()
        return memo[mask]

    def components(self, which: str) -> tuple[int, ...]:
        """Connected components of the generator hypergraph as masks.

        Outer measures generated by pre-measures are additive across them.
        """
        which = _check_which(which)
        cache = self.__dict__.setdefault("_components", {})
        if which not in cache:
            parent = list(range(self.n))

            def find(i):
                while parent[i] != i:
                    parent[i] = parent[parent[i]]
                    i = parent[i]
                return i

            for mask, _ in self.generators(which):
                bits = list(iter_bits(mask))
                for b in bits[1:]:
                    ra, rb = find(bits[0]), find(b)
                    if ra != rb:
                        parent[rb] = ra
            groups: dict[int, int] = {}
            for i in range(self.n):
                groups[find(i)] = groups.get(find(i), 0) | (1 << i)
            cache[which] = tuple(sorted(groups.values(), key=lambda m: (m & -m)))
        return cache[which]

    def minimal_cover(self, which: str, mask: int) -> list[int]:
        """Indices of a cheapest cover of ``mask``; lowest generator index wins ties."""
        which = _check_which(which)
        out = []
        rest = mask
        while rest:
            target = self.measure(which, rest)
            low = (rest & -rest).bit_length() - 1
            for idx, g, val in self._by_point[which][low]:
                if val + self.measure(which, rest & ~g) == target:
                    out.append(idx)
                    rest &= ~g
                    break
            else:  # pragma: no cover - guarded by the DP recurrence
                raise AssertionError("cover reconstruction failed")
        return sorted(out)

    # -- serialisation --------------------------------------------------------

    def to_json(self) -> dict:
        width = max(1, math.ceil(self.n / 4))
        hexmask = lambda m: f"0x{m:0{width}x}"  # noqa: E731
        return {
            "points": [p if isinstance(p, (str, int)) else list(p) for p in self.points],
            "omega": [str(w) for w in self.omega],
            "muGen": [{"mask": hexmask(m), "sigma": str(s)} for m, s in self.mu_gen],
            "nuGen": [{"mask": hexmask(m), "tau": str(t)} for m, t in self.nu_gen],
        }

    @classmethod
    def from_json(cls, data: dict, exact_limit: int = DEFAULT_EXACT_LIMIT) -> "FiniteSpace":
        try:
            pts = data["points"]
            points = list(range(pts)) if isinstance(pts, int) else [
                tuple(p) if isinstance(p, list) else p for p in pts
            ]
            omega = data.get("omega")
            if omega is None:
                omega = [1] * len(points)
            mu = [(_parse_mask(g["mask"]), g["sigma"]) for g in data["muGen"]]
            nu = [(_parse_mask(g["mask"]), g["tau"]) for g in data["nuGen"]]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InputError(f"malformed space description: {exc!r}") from exc
        return cls(points, omega, mu, nu, exact_limit=exact_limit, name=data.get("name", ""))


def _parse_mask(value) -> int:
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return int(value, 16)
    if isinstance(value, list):  # list of point indices
        return sum(1 << int(i) for i in value)
    raise InputError(f"cannot read mask {value!r}")


def load_space(path: str, exact_limit: int = DEFAULT_EXACT_LIMIT) -> FiniteSpace:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return FiniteSpace.from_json(data, exact_limit=exact_limit)


def build_measure_table(space: FiniteSpace, which: str) -> MeasureTable:
    """Cheapest-cover values for every subset via subset DP.

    Every cover of ``A`` must cover its lowest point, so it is enough to branch
    on the generators through that point.
    """
    which = _check_which(which)
    n = space.n
    if n > space.exact_limit:
        raise CapacityError(
            f"ground set has {n} points, exact-mode limit is {space.exact_limit}"
        )
    gens = space.generators(which)
    denom = 1
    for _, v in gens:
        denom = denom * v.denominator // math.gcd(denom, v.denominator)
    by_point: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for mask, val in gens:
        iv = int(val * denom)
        for i in iter_bits(mask):
            by_point[i].append((mask, iv))
    size = 1 << n
    vals = [0] * size
    for a in range(1, size):
        low = (a & -a).bit_length() - 1
        vals[a] = min(iv + vals[a & ~g] for g, iv in by_point[low])
    if max(vals) < 2**62:
        scaled = np.array(vals, dtype=np.int64)
    else:
        scaled = np.array(vals, dtype=object)
    values = tuple(Fraction(v, denom) for v in vals)
    return MeasureTable(which, n, values, denom, scaled)


def outer_measure(table: MeasureTable, mask: int) -> Fraction:
    return table[mask]


# -- Caratheodory collections -----------------------------------------------------


@dataclass(frozen=True)
class CaratheodoryVerdict:
    holds: bool
    witness: int | None = None
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    exhaustive: bool = True
    checked: int = 0

    def __bool__(self) -> bool:
        return self.holds


def check_disjoint(collection: Sequence[int]) -> int:
    union = 0
    for a in collection:
        if union & a:
            raise InputError("collection members are not pairwise disjoint")
        union |= a
    return union


def _cara_terms(space: FiniteSpace, collection: Sequence[int], u: int):
    lhs = sum((space.measure("nu", u & a) for a in collection), Fraction(0))
    union = 0
    for a in collection:
        union |= a
    return lhs, space.measure("nu", u & union)


def caratheodory_check(
    space: FiniteSpace,
    collection: Sequence[int],
    K,
    *,
    samples: int | None = None,
    seed: int = 0,
    exact_component_limit: int | None = None,
) -> CaratheodoryVerdict:
    """Decide ``sum_A nu(U & A) <= K nu(U & union)`` for all ``U``.

    Only ``U`` inside the union matter, and both sides are additive over the
    connected components of the nu generators, so the exhaustive search runs
    component by component. Components larger than the limit fall back to
    ``samples`` random ``U`` (the verdict is then marked non-exhaustive).
    The witness maximises the ratio lhs/rhs.
    """
    K = to_fraction(K)
    collection = [a for a in collection if a]
    union = check_disjoint(collection)
    if len(collection) <= 1:
        return CaratheodoryVerdict(True, checked=0)
    limit = exact_component_limit or space.exact_limit
    rng = random.Random(seed)
    exhaustive = True
    checked = 0
    best = None  # (ratio, U, lhs, rhs) over violations
    for comp in space.components("nu"):
        part = union & comp
        if not part:
            continue
        members = [a & part for a in collection if a & part]
        if len(members) <= 1:
            continue
        k = popcount(part)
        if k <= limit:
            candidates: Iterable[int] = iter_submasks(part)
        else:
            exhaustive = False
            bits = list(iter_bits(part))
            count = samples if samples is not None else 1000
            candidates = (
                sum(1 << b for b in bits if rng.random() < 0.5) for _ in range(count)
            )
        for u in candidates:
            if not u:
                continue
            checked += 1
            lhs, rhs = _cara_terms(space, members, u)
            if lhs > K * rhs:
                ratio = lhs / rhs if rhs else math.inf
                if best is None or ratio > best[0] or (ratio == best[0] and u < best[1]):
                    best = (ratio, u, lhs, rhs)
        if best is not None:
            break
    if best is None:
        return CaratheodoryVerdict(True, exhaustive=exhaustive, checked=checked)
    _, u, lhs, rhs = best
    return CaratheodoryVerdict(False, u, lhs, rhs, exhaustive, checked)


def caratheodory_constant(space: FiniteSpace, collection: Sequence[int]) -> Fraction:
    """Smallest K for which the collection is Caratheodory (exhaustive per component)."""
    collection = [a for a in collection if a]
    union = check_disjoint(collection)
    best = Fraction(1)
    if len(collection) <= 1:
        return best
    for comp in space.components("nu"):
        part = union & comp
        members = [a & part for a in collection if a & part]
        if len(members) <= 1:
            continue
        if popcount(part) > 20:
            raise CapacityError("component too large for an exact Caratheodory constant")
        for u in iter_submasks(part):
            if not u:
                continue
            lhs, rhs = _cara_terms(space, members, u)
            if lhs / rhs > best:
                best = lhs / rhs
    return best


def make_space(
    n: int,
    omega: Sequence,
    mu_gen: Sequence,
    nu_gen: Sequence,
    points: Sequence | None = None,
    **kw,
) -> FiniteSpace:
    return FiniteSpace(tuple(points) if points is not None else tuple(range(n)), omega, mu_gen, nu_gen, **kw)


def singletons(n: int, weights: Sequence | None = None) -> list[tuple[int, Fraction]]:
    weights = weights if weights is not None else [1] * n
    return [(1 << i, to_fraction(w)) for i, w in enumerate(weights)]


def random_space(
    n: int,
    seed: int,
    *,
    max_gens: int = 7,
    denominators: Sequence[int] = (1, 2, 3, 4),
) -> FiniteSpace:
    """A random space with rational weights and random generator families.

    Each family has a random number of random subsets, then singletons are
    added for uncovered points so that every point is covered.
    """
    rng = random.Random(seed)
    full = (1 << n) - 1

    def rat():
        d = rng.choice(denominators)
        return Fraction(rng.randint(1, 4 * d), d)

    def family():
        gens = []
        for _ in range(rng.randint(1, max_gens)):
            mask = rng.randint(1, full)
            gens.append((mask, rat()))
        covered = 0
        for m, _ in gens:
            covered |= m
        for i in iter_bits(full & ~covered):
            gens.append((1 << i, rat()))
        return gens

    omega = [rat() for _ in range(n)]
    return FiniteSpace(tuple(range(n)), omega, family(), family(), name=f"random-{n}-{seed}")


MeasureFn = Callable[[int], Fraction]
