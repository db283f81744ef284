"""The discrete dyadic upper half 3-space X'_J.

Points are index triples (m, l, n): position m, scale l, frequency n. The
strip D'(m, l) holds every point below scale l whose position descends from
m; the tree T'(m, l, n) keeps only the frequency index ``n >> (l - l')`` at
each lower scale l'. Strips carry pre-measure 2^l and so do trees.

Besides the generic cover search, two closed forms are provided:

* mu'(A) is the sum of 2^l over the maximal home strips D'(m', l') of points
  (m', l', n') of A;
* nu'(A) is the sum of 2^l over the points of A that are maximal for tree
  containment (p below q when p lies in the tree rooted at q).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .conditions import CoveringFunctionSpec
from .norms import INF, NormEngine, Outer, Inner
from .settings import Setting
from .space import CapacityError, FiniteSpace, InputError, iter_bits

Index = tuple[int, int, int]
MAX_POINTS = 4096


# -- index geometry (independent of truncation) -------------------------------------


def in_strip(strip: tuple[int, int], pt: Index) -> bool:
    m, l = strip
    pm, pl, _ = pt
    return pl <= l and pm >> (l - pl) == m


def in_tree(tree: Index, pt: Index) -> bool:
    m, l, n = tree
    pm, pl, pn = pt
    return pl <= l and pm >> (l - pl) == m and pn == n >> (l - pl)


def strip_contains(outer: tuple[int, int], inner: tuple[int, int]) -> bool:
    """D'(inner) is a subset of D'(outer)."""
    (m1, l1), (m2, l2) = outer, inner
    return l2 <= l1 and m2 >> (l1 - l2) == m1


def strip_intersection(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int] | None:
    if strip_contains(a, b):
        return b
    if strip_contains(b, a):
        return a
    return None


def strip_tree_intersection(strip: tuple[int, int], tree: Index) -> Index | None:
    """D'(m, l) intersected with T'(m2, l2, n2), as a tree index or None."""
    m, l = strip
    tm, tl, tn = tree
    if l <= tl and m >> (tl - l) == tm:
        return (m, l, tn >> (tl - l))
    if tl <= l and tm >> (l - tl) == m:
        return tree
    return None


def strip_of_tree(tree: Index) -> tuple[int, int]:
    return tree[0], tree[1]


def base_interval(strip: tuple[int, int], lmin: int) -> tuple[int, int]:
    """pi(D'(m, l)) in units of 2^lmin, as a half-open integer range."""
    m, l = strip
    w = 1 << (l - lmin)
    return m * w, (m + 1) * w


def ancestors(strip: tuple[int, int], lmax: int) -> Iterable[tuple[int, int]]:
    m, l = strip
    for up in range(l + 1, lmax + 1):
        yield m >> (up - l), up


def half_covered(collection: Iterable[tuple[int, int]], lmin: int, lmax: int) -> set[tuple[int, int]]:
    """N: strips with scale in [lmin, lmax] whose base is at least half covered."""
    coll = set(collection)
    spans = sorted(base_interval(s, lmin) for s in coll)
    merged: list[list[int]] = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])

    def covered(lo, hi):
        return sum(max(0, min(hi, b) - max(lo, a)) for a, b in merged)

    out = set()
    # strips meeting the covered set are ancestors or descendants of members
    cands = set()
    for s in coll:
        cands.add(s)
        cands.update(ancestors(s, lmax))
        m, l = s
        for down in range(lmin, l):
            w = 1 << (l - down)
            cands.update((mm, down) for mm in range(m * w, (m + 1) * w))
    for e in cands:
        if not lmin <= e[1] <= lmax:
            continue
        lo, hi = base_interval(e, lmin)
        if 2 * covered(lo, hi) >= hi - lo:
            out.add(e)
    return out


def maximal_strips(collection: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    """M: members not strictly inside another member."""
    coll = set(collection)
    out = set()
    for s in coll:
        if not any(t != s and strip_contains(t, s) for t in coll):
            out.add(s)
    return out


# -- the truncated setting -------------------------------------------------------------


def level_range(J: int, l: int, which: str) -> range:
    if which == "m":
        w = J * (1 << (J - l)) if l <= J else -(-J // (1 << (l - J)))
        return range(-w, w)
    return range(-J * (1 << (J + l)), J * (1 << (J + l)))


def tile_volume(l: int) -> Fraction:
    """|I(m,l)| * |(2^{l-1}, 2^l]| * |I(n,-l)| = 2^{l-1}."""
    return Fraction(2) ** (l - 1)


@dataclass(eq=False)
class DyadicSetting(Setting):
    J: int = 1
    points: tuple[Index, ...] = ()
    index: dict = field(default_factory=dict)
    cells: dict = field(default_factory=dict)
    strips: dict = field(default_factory=dict)  # (m, l) -> mask, every scale up to lmax_n
    trees: dict = field(default_factory=dict)  # (m, l, n) -> mask, scales up to J
    lmin: int = 0
    lmax_n: int = 0

    def strip_mask(self, strip: tuple[int, int]) -> int:
        if strip in self.strips:
            return self.strips[strip]
        m, l = strip
        mask = 0
        for lp in range(self.lmin, min(l, self.J) + 1):
            w = 1 << (l - lp)
            for mm in range(m * w, (m + 1) * w):
                mask |= self.cells.get((mm, lp), 0)
        self.strips[strip] = mask
        return mask

    def tree_mask(self, tree: Index) -> int:
        if tree in self.trees:
            return self.trees[tree]
        m, l, n = tree
        mask = 0
        for lp in range(self.lmin, min(l, self.J) + 1):
            w = 1 << (l - lp)
            nn = n >> (l - lp)
            for mm in range(m * w, (m + 1) * w):
                i = self.index.get((mm, lp, nn))
                if i is not None:
                    mask |= 1 << i
        self.trees[tree] = mask
        return mask

    def pts(self, mask: int) -> list[Index]:
        return [self.points[i] for i in iter_bits(mask)]

    def home_cells(self, mask: int) -> set[tuple[int, int]]:
        return {(m, l) for m, l, _ in self.pts(mask)}


def make_dyadic_discrete(J: int, omega: str = "unit") -> DyadicSetting:
    """X'_J with strips, trees and the covering function C = M o N o Q.

    ``omega="volume"`` weights each point by the volume 2^{l-1} of its tile.
    """
    if J < 1:
        raise InputError("J must be at least 1")
    lmin = -J + 1
    points: list[Index] = []
    for l in range(lmin, J + 1):
        for m in level_range(J, l, "m"):
            for n in level_range(J, l, "n"):
                points.append((m, l, n))
    if len(points) > MAX_POINTS:
        raise CapacityError(f"X'_{J} has {len(points)} points, limit is {MAX_POINTS}")
    index = {p: i for i, p in enumerate(points)}
    cells: dict[tuple[int, int], int] = {}
    for i, (m, l, n) in enumerate(points):
        cells[(m, l)] = cells.get((m, l), 0) | (1 << i)
    lmax_n = 1
    while 2 ** lmax_n <= J * 2**J:  # largest l with 2^{l-1} <= J 2^J
        lmax_n += 1
    st = DyadicSetting(
        space=None,  # filled below
        J=J,
        points=tuple(points),
        index=index,
        cells=cells,
        lmin=lmin,
        lmax_n=lmax_n,
        kind="dyadic",
        params={"J": J, "omega": omega},
    )
    # strips of every scale that can matter for N; deduplicate equal point sets
    strip_gens: dict[int, tuple[Fraction, tuple[int, int]]] = {}
    for l in range(lmin, lmax_n + 1):
        for m in level_range(J, l, "m"):
            mask = st.strip_mask((m, l))
            if not mask:
                continue
            key = (Fraction(2) ** l, (m, l))
            if mask not in strip_gens or key < strip_gens[mask]:
                strip_gens[mask] = key
    tree_gens: list[tuple[int, Fraction]] = []
    for l in range(lmin, J + 1):
        for m in level_range(J, l, "m"):
            for n in level_range(J, l, "n"):
                tree_gens.append((st.tree_mask((m, l, n)), Fraction(2) ** l))
    weights = [tile_volume(l) if omega == "volume" else Fraction(1) for _, l, _ in points]
    mu_gen = sorted(((mask, val) for mask, (val, _) in strip_gens.items()), key=lambda g: (g[1], g[0]))
    space = FiniteSpace(
        tuple(points),
        weights,
        mu_gen,
        tree_gens,
        name=f"dyadic-J{J}-{omega}",
        evaluators={"mu": lambda a: structured_measure(st, "mu", a), "nu": lambda a: structured_measure(st, "nu", a)},
    )
    st.space = space
    st.strip_family = {mask: idx for mask, (_, idx) in strip_gens.items()}
    st.K = Fraction(1)
    atoms = tuple(cells[c] for c in sorted(cells))
    st.covering = CoveringFunctionSpec(
        "dyadicMNQ", len(points), 2, tuple(sorted(strip_gens)), lambda a: covering_members(st, a), atoms=atoms
    )
    return st


def covering_members(st: DyadicSetting, mask: int) -> tuple[int, ...]:
    """C(A) = M(N(Q(A))) as truncated strip masks."""
    if not mask:
        return ()
    q = st.home_cells(mask)
    chosen = maximal_strips(half_covered(q, st.lmin, st.lmax_n))
    out = []
    for s in sorted(chosen, key=lambda s: (s[1], s[0])):
        m = st.strip_mask(s)
        if m:
            out.append(m)
    return tuple(out)


def structured_measure(st: DyadicSetting, which: str, mask: int) -> Fraction:
    """Closed-form mu' and nu' on X'_J."""
    if not mask:
        return Fraction(0)
    J = st.J
    if which == "mu":
        cells = st.home_cells(mask)
        total = Fraction(0)
        for m, l in cells:
            if not any((m >> (up - l), up) in cells for up in range(l + 1, J + 1)):
                total += Fraction(2) ** l
        return total
    if which == "nu":
        pts = set(st.pts(mask))
        total = Fraction(0)
        for m, l, n in pts:
            dominated = False
            for up in range(l + 1, J + 1):
                d = up - l
                mm = m >> d
                if any((mm, up, nn) in pts for nn in range(n << d, (n + 1) << d)):
                    dominated = True
                    break
            if not dominated:
                total += Fraction(2) ** l
        return total
    raise InputError(f"which must be 'mu' or 'nu', got {which!r}")


# -- functions on tiles ------------------------------------------------------------------


def tile_map(values: Mapping[Index, float], r: float) -> dict[Index, float]:
    """F(f, r) for a function equal to ``values[t]`` on the tile H(t)."""
    out = {}
    for (m, l, n), v in values.items():
        if r == INF:
            out[(m, l, n)] = float(v)
        else:
            out[(m, l, n)] = float(v) * float(tile_volume(l)) ** (1.0 / r)
    return out


def as_array(st: DyadicSetting, values: Mapping[Index, float]) -> list[float]:
    arr = [0.0] * len(st.points)
    for key, v in values.items():
        if key not in st.index:
            raise InputError(f"tile {key} lies outside X'_{st.J}")
        arr[st.index[key]] = float(v)
    return arr


def tile_norm_comparison(J: int, values: Mapping[Index, float], p: float, q: float, r: float) -> dict:
    """Norms of a tile-constant function (weights = tile volumes) against
    the norms of F(f, r) on unit weights."""
    vol = make_dyadic_discrete(J, omega="volume")
    unit = make_dyadic_discrete(J, omega="unit")
    e_vol = NormEngine(vol.space, as_array(vol, values))
    e_unit = NormEngine(unit.space, as_array(unit, tile_map(values, r)))
    return {
        "single": (e_vol.norm(q, Inner(r)), e_unit.norm(q, Inner(r))),
        "double": (e_vol.norm(p, Outer(q, r)), e_unit.norm(p, Outer(q, r))),
    }


def random_tile_function(st: DyadicSetting, seed: int, support: int = 6) -> dict[Index, float]:
    rng = random.Random(seed)
    chosen = rng.sample(st.points, support)
    return {p: rng.choice([0.5, 1.0, 1.5, 2.0, 3.0]) for p in chosen}
