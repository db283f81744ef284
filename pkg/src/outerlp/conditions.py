"""Covering functions and the canopy / crop conditions on finite spaces.

A covering function assigns to every set ``A`` a collection ``C(A)`` of
pairwise disjoint members of a family ``E``; its union ``B_C(A)`` is the
parent set. ``atoms`` lists a partition of the ground set such that ``C(A)``
only depends on which atoms ``A`` meets; this lets the checks enumerate atom
unions instead of all subsets.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .space import (
    FiniteSpace,
    InputError,
    caratheodory_check,
    check_disjoint,
    iter_bits,
    iter_submasks,
    popcount,
    to_fraction,
)


@dataclass(eq=False)
class CoveringFunctionSpec:
    rule: str
    n: int
    phi: Fraction
    family: tuple[int, ...] | None
    assign_fn: Callable[[int], tuple[int, ...]] = field(repr=False)
    atoms: tuple[int, ...] | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.phi = to_fraction(self.phi)
        if self.atoms is None:
            self.atoms = tuple(1 << i for i in range(self.n))

    def assign(self, mask: int) -> tuple[int, ...]:
        if mask not in self._cache:
            members = tuple(m for m in self.assign_fn(mask) if m)
            self._cache[mask] = members
        return self._cache[mask]

    def parent(self, mask: int) -> int:
        out = 0
        for m in self.assign(mask):
            out |= m
        return out

    def hull(self, mask: int) -> int:
        """Union of the atoms met by ``mask``."""
        out = 0
        for a in self.atoms:
            if a & mask:
                out |= a
        return out

    def atom_classes(self, region: int) -> Iterator[int]:
        """One representative inside ``region`` per class of subsets of ``region``."""
        meeting = [a & region for a in self.atoms if a & region]
        for r in range(len(meeting) + 1):
            for combo in itertools.combinations(meeting, r):
                rep = 0
                for a in combo:
                    rep |= a
                yield rep

    def in_family(self, member: int) -> bool:
        return self.family is None or member in self._family_set

    @property
    def _family_set(self) -> frozenset:
        if "_fs" not in self._cache:
            self._cache["_fs"] = frozenset(self.family or ())
        return self._cache["_fs"]


def identity_spec(space: FiniteSpace, phi=1) -> CoveringFunctionSpec:
    """E = all subsets, C(A) = {A}."""
    return CoveringFunctionSpec("identity", space.n, phi, None, lambda a: (a,) if a else ())


def singleton_spec(space: FiniteSpace) -> CoveringFunctionSpec:
    """E = singletons, C(A) = the points of A; the parent map is the identity."""
    fam = tuple(1 << i for i in range(space.n))
    return CoveringFunctionSpec(
        "singletons", space.n, 1, fam, lambda a: tuple(1 << i for i in iter_bits(a))
    )


def slab_spec(space: FiniteSpace, slabs: Sequence[int], phi=1) -> CoveringFunctionSpec:
    """E = a partition into slabs, C(A) = the slabs meeting A."""
    slabs = tuple(slabs)
    check_disjoint(slabs)
    return CoveringFunctionSpec(
        "slabs", space.n, phi, slabs, lambda a: tuple(s for s in slabs if s & a), atoms=slabs
    )


def explicit_spec(space: FiniteSpace, table: dict[int, Sequence[int]], family: Sequence[int], phi) -> CoveringFunctionSpec:
    table = {int(k): tuple(v) for k, v in table.items()}
    missing = [a for a in range(1, 1 << space.n) if a not in table]
    if missing:
        raise InputError(f"explicit covering function undefined on {len(missing)} sets, e.g. {missing[0]:#x}")
    return CoveringFunctionSpec("explicit", space.n, phi, tuple(family), lambda a: table.get(a, ()))


def spec_from_json(space: FiniteSpace, data: dict) -> CoveringFunctionSpec:
    rule = data.get("assignRule", "identity")
    phi = data.get("phi", 1)
    parse = lambda v: int(v, 16) if isinstance(v, str) else int(v)  # noqa: E731
    if rule == "identity":
        return identity_spec(space, phi)
    if rule == "singletons":
        return singleton_spec(space)
    if rule == "slabs":
        return slab_spec(space, [parse(m) for m in data["family"]], phi)
    if rule == "explicit":
        table = {parse(e["set"]): [parse(m) for m in e["cover"]] for e in data["explicit"]}
        return explicit_spec(space, table, [parse(m) for m in data["family"]], phi)
    raise InputError(f"unknown assignRule {rule!r}")


@dataclass
class ConditionVerdict:
    condition: str
    holds: bool
    witness: dict | None = None
    exhaustive: bool = True
    checked: int = 0
    params: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "holds" if self.holds else "fails"

    def to_json(self) -> dict:
        wit = None
        if self.witness is not None:
            wit = {
                k: ([hex(x) for x in v] if isinstance(v, (list, tuple)) else hex(v) if isinstance(v, int) else str(v))
                for k, v in self.witness.items()
            }
        return {
            "condition": self.condition,
            "status": self.status,
            "exhaustive": self.exhaustive,
            "checked": self.checked,
            "params": {k: str(v) for k, v in self.params.items()},
            "witness": wit,
        }


def _is_mu_atom_partition(space: FiniteSpace, atoms: Sequence[int]) -> bool:
    """True when points in one atom lie in exactly the same mu generators."""
    for atom in atoms:
        sigs = {tuple(bool(m >> i & 1) for m, _ in space.mu_gen) for i in iter_bits(atom)}
        if len(sigs) > 1:
            return False
    return True


def parent_function_check(
    space: FiniteSpace,
    spec: CoveringFunctionSpec,
    *,
    max_classes: int = 1 << 16,
    samples: int = 2000,
    seed: int = 0,
) -> ConditionVerdict:
    """Check A within B_C(A), mu(B_C(A)) <= phi mu(A), disjointness and monotonicity.

    When the atoms are mu-atoms, every set has the same parent and the same
    measure as its atom hull, so checking atom unions covers all subsets.
    With more than ``max_classes`` unions, ``samples`` random unions are
    checked instead, each against one random single-atom enlargement.
    """
    atoms = spec.atoms if _is_mu_atom_partition(space, spec.atoms) else tuple(1 << i for i in range(space.n))
    params = {"phi": spec.phi}
    exhaustive = len(atoms) <= max_classes.bit_length() - 1
    rng = random.Random(seed)

    def union_of(combo):
        a = 0
        for x in combo:
            a |= x
        return a

    if exhaustive:
        sets = [union_of(c) for r in range(len(atoms) + 1) for c in itertools.combinations(atoms, r)]
    else:
        sets = [union_of(a for a in atoms if rng.random() < rng.random()) for _ in range(samples)]
    checked = 0
    parents = {}

    def verdict(holds, witness=None):
        return ConditionVerdict("parent", holds, witness, exhaustive, checked, params)

    for a in sets:
        members = spec.assign(a)
        b = 0
        for mem in members:
            if mem & b:
                return verdict(False, {"A": a, "reason": "members of C(A) overlap"})
            if not spec.in_family(mem):
                return verdict(False, {"A": a, "member": mem, "reason": "not in E"})
            b |= mem
        checked += 1
        if a & ~b:
            return verdict(False, {"A": a, "B": b, "reason": "A not in B_C(A)"})
        if space.measure("mu", b) > spec.phi * space.measure("mu", a):
            return verdict(False, {"A": a, "B": b, "reason": "mu(B_C(A)) > phi mu(A)"})
        parents[a] = b
    for a, b in parents.items():
        outside = [x for x in atoms if not x & a]
        if not exhaustive and outside:
            outside = [rng.choice(outside)]
        for atom in outside:
            big = parents.get(a | atom)
            if big is None:
                big = spec.parent(a | atom)
            if b & ~big:
                return verdict(False, {"A1": a, "A2": a | atom, "reason": "not monotone"})
    return verdict(True)


# -- Caratheodory helpers --------------------------------------------------------


class CaratheodoryOracle:
    """Exact Caratheodory tests with parameter K, vectorised when a table exists."""

    def __init__(self, space: FiniteSpace, K, *, samples: int = 256, seed: int = 0):
        self.space = space
        self.K = to_fraction(K)
        self.samples = samples
        self.seed = seed
        self.vector = space.has_table() and space.table("nu").scaled.dtype != object
        if self.vector:
            self.nu = space.table("nu").scaled
            self.us = np.arange(1 << space.n, dtype=np.int64)

    def lhs(self, collection: Sequence[int]) -> np.ndarray:
        out = np.zeros(self.us.shape[0], dtype=np.int64)
        for a in collection:
            out += self.nu[self.us & a]
        return out

    def holds(self, collection: Sequence[int]) -> tuple[bool, int | None]:
        collection = [a for a in collection if a]
        union = check_disjoint(collection)
        if len(collection) <= 1:
            return True, None
        if self.vector:
            lhs = self.lhs(collection) * self.K.denominator
            rhs = self.nu[self.us & union] * self.K.numerator
            bad = np.nonzero(lhs > rhs)[0]
            return (True, None) if bad.size == 0 else (False, int(bad[0]))
        v = caratheodory_check(self.space, collection, self.K, samples=self.samples, seed=self.seed)
        return v.holds, v.witness

    def extensions(self, collection: Sequence[int], candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """For each candidate D, whether collection + {D} is Caratheodory, and a violating U."""
        union = 0
        for a in collection:
            union |= a
        lhs0 = self.lhs(collection)[:, None]
        u = self.us[:, None]
        d = candidates[None, :]
        lhs = (lhs0 + self.nu[u & d]) * self.K.denominator
        rhs = self.nu[u & (d | union)] * self.K.numerator
        bad = lhs > rhs
        ok = ~bad.any(axis=0)
        wit = np.where(ok, -1, np.argmax(bad, axis=0))
        return ok, wit


def disjoint_collections(n: int) -> Iterator[tuple[int, ...]]:
    """Every collection of pairwise disjoint nonempty subsets of n points.

    Each point goes to no block or to one block (restricted growth), so every
    collection appears once. There are Bell(n + 1) of them.
    """

    def rec(i, blocks):
        if i == n:
            yield tuple(blocks)
            return
        yield from rec(i + 1, blocks)
        for j in range(len(blocks)):
            blocks[j] |= 1 << i
            yield from rec(i + 1, blocks)
            blocks[j] ^= 1 << i
        blocks.append(1 << i)
        yield from rec(i + 1, blocks)
        blocks.pop()

    yield from rec(0, [])


def random_disjoint_collection(rng: random.Random, region: int, max_blocks: int = 4) -> tuple[int, ...]:
    bits = list(iter_bits(region))
    nblocks = rng.randint(1, max_blocks)
    blocks = [0] * nblocks
    for b in bits:
        slot = rng.randint(-1, nblocks - 1)
        if slot >= 0:
            blocks[slot] |= 1 << b
    return tuple(x for x in blocks if x)


def _sample_collection(rng: random.Random, spec: CoveringFunctionSpec) -> tuple[int, ...]:
    """A random disjoint collection inside a few atoms, so its parent set leaves room for D."""
    atoms = list(spec.atoms)
    region = 0
    for a in rng.sample(atoms, rng.randint(1, min(3, len(atoms)))):
        region |= a
    return random_disjoint_collection(rng, region)


def canopy_check(
    space: FiniteSpace,
    spec: CoveringFunctionSpec,
    K,
    *,
    budget: int = 25000,
    d_budget: int = 512,
    seed: int = 0,
    samples: int = 256,
    collections: Iterable[Sequence[int]] | None = None,
) -> ConditionVerdict:
    """Every K-Caratheodory collection stays K-Caratheodory after adding a set
    disjoint from its parent set.

    Exhaustive over all disjoint collections and all D when the ground set is
    small enough for ``budget``; otherwise random collections and D are drawn.
    """
    K = to_fraction(K)
    cara = CaratheodoryOracle(space, K, samples=samples, seed=seed)
    rng = random.Random(seed)
    n = space.n
    exhaustive = collections is None and space.has_table() and n <= 8 and _bell(n + 1) <= budget
    if collections is None:
        if exhaustive:
            collections = disjoint_collections(n)
        else:
            collections = (_sample_collection(rng, spec) for _ in range(budget))
    params = {"K": K, "phi": spec.phi}
    checked = 0
    for coll in collections:
        ok, _ = cara.holds(coll)
        if not ok:
            continue
        union = 0
        for a in coll:
            union |= a
        rest = space.full & ~spec.parent(union)
        if not rest:
            continue
        if cara.vector and popcount(rest) <= 10:
            subs = [s for s in iter_submasks(rest) if s]
            cands = np.array(subs, dtype=np.int64)
            good, wit = cara.extensions(coll, cands)
            checked += len(subs)
            if not good.all():
                i = int(np.argmin(good))
                return ConditionVerdict(
                    "canopy", False, {"collection": list(coll), "D": int(cands[i]), "U": int(wit[i])},
                    exhaustive, checked, params,
                )
            continue
        exhaustive = False
        bits = list(iter_bits(rest))
        for _ in range(d_budget):
            d = sum(1 << b for b in bits if rng.random() < 0.5)
            if not d:
                continue
            checked += 1
            ok, u = cara.holds(list(coll) + [d])
            if not ok:
                return ConditionVerdict(
                    "canopy", False, {"collection": list(coll), "D": d, "U": u}, False, checked, params
                )
    return ConditionVerdict("canopy", True, None, exhaustive, checked, params)


def _bell(k: int) -> int:
    row = [1]
    for _ in range(k - 1):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
    return row[-1]


def _crop_admissible(space, spec, collection, sub, cara) -> tuple[bool, dict | None]:
    ok, u = cara.holds(sub)
    if not ok:
        return False, {"reason": "not Caratheodory", "U": u}
    union = 0
    for d in sub:
        union |= d
    members = set(collection)
    for f in spec.atom_classes(space.full & ~union):
        if not f:
            continue
        full_parent = spec.parent(f)
        cropped = 0
        for m in spec.assign(f):
            if m not in members:
                cropped |= m
        if cropped != full_parent:
            return False, {"reason": "cropped parent differs", "F": f}
    return True, None


def crop_subcollection(
    space: FiniteSpace,
    spec: CoveringFunctionSpec,
    collection: Sequence[int],
    K,
    *,
    cara: CaratheodoryOracle | None = None,
    max_fallback: int = 4096,
) -> tuple[int, ...] | None:
    """A K-Caratheodory subcollection D of ``collection`` with which crop holds.

    Tries the greedy maximal disjoint subcollection first (largest members
    first), then every disjoint subcollection by decreasing size. Returns None
    if no admissible D exists within the search budget.
    """
    cara = cara or CaratheodoryOracle(space, K)
    coll = sorted({m for m in collection if m}, key=lambda m: (-popcount(m), m))
    chosen = []
    used = 0
    for m in coll:
        if not m & used:
            chosen.append(m)
            used |= m
    ok, _ = _crop_admissible(space, spec, coll, chosen, cara)
    if ok:
        return tuple(chosen)
    tried = 0
    for size in range(len(coll), -1, -1):
        for combo in itertools.combinations(coll, size):
            u = 0
            disjoint = True
            for m in combo:
                if m & u:
                    disjoint = False
                    break
                u |= m
            if not disjoint:
                continue
            tried += 1
            if tried > max_fallback:
                return None
            ok, _ = _crop_admissible(space, spec, coll, list(combo), cara)
            if ok:
                return tuple(combo)
    return None


def crop_check(
    space: FiniteSpace,
    spec: CoveringFunctionSpec,
    K,
    *,
    budget: int = 4096,
    seed: int = 0,
    samples: int = 256,
    collections: Iterable[Sequence[int]] | None = None,
) -> ConditionVerdict:
    """For every collection A of members of E some K-Caratheodory D within A
    lets the parent of any F disjoint from union(D) be rebuilt without A."""
    K = to_fraction(K)
    cara = CaratheodoryOracle(space, K, samples=samples, seed=seed)
    fam = list(spec.family) if spec.family is not None else list(range(1, 1 << space.n))
    params = {"K": K}
    exhaustive = collections is None and len(fam) <= 20 and (1 << len(fam)) <= budget
    if collections is None:
        if exhaustive:
            collections = (
                [fam[i] for i in range(len(fam)) if bits >> i & 1] for bits in range(1 << len(fam))
            )
        else:
            rng = random.Random(seed)
            collections = ([m for m in fam if rng.random() < 0.5] for _ in range(budget))
    checked = 0
    for coll in collections:
        checked += 1
        sub = crop_subcollection(space, spec, coll, K, cara=cara)
        if sub is None:
            return ConditionVerdict("crop", False, {"collection": list(coll)}, exhaustive, checked, params)
    return ConditionVerdict("crop", True, None, exhaustive, checked, params)
