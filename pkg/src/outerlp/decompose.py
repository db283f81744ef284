"""Level-by-level atomic decompositions and their verification.

Interior: for the size l^r, sets U_j with size above 2^j such that what is
left outside V_j = union of U_l (l >= j) has L^infinity size at most 2^j.

Exterior (for l^q_nu(l^r)): sets E_k above level b^k with removed sets F_k,
in three flavours:

* ``canopy``: pieces chosen one at a time, each disjoint from the parent set
  of the previous ones; F_k is the parent set of all E_l with l >= k;
* ``qGeqR``: E_k grows by unions, F_k = union of E_l for l >= k;
* ``psi``: as ``canopy`` but with base psi = max(phi, 2)^{3/p} and
  F_k = B(B(F_{k+1} u E_k)), splitting F_k minus F_{k+1} in two parts.

Every selection takes the size-maximising admissible set, smallest mask on
ties, so decompositions are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .conditions import CoveringFunctionSpec
from .norms import INF, Level, NormEngine, gt, le
from .space import FiniteSpace, InputError, caratheodory_constant, popcount

MAX_LEVELS = 4000
VARIANTS = ("canopy", "qGeqR", "psi")


def top_level(value: float, base: float) -> int:
    """Smallest k with value <= base^k (up to rounding)."""
    k = math.ceil(math.log(value, base)) if value > 0 else 0
    while gt(value, base**k):
        k += 1
    while le(value, base ** (k - 1)):
        k -= 1
    return k


# -- interior -----------------------------------------------------------------------------


@dataclass
class InteriorDecomposition:
    q: float
    r: float
    region: int  # local mask of the decomposed function's support
    levels: dict[int, int]  # j -> U_j (local mask), nonempty only
    top: int
    N: int = 1
    global_levels: dict[int, int] = field(default_factory=dict)  # j -> U_j as a mask of the space

    @property
    def c(self) -> float:
        return 2.0 ** (-self.N - 1)

    @property
    def C(self) -> float:
        return 2.0 ** ((self.N + 1) * self.r) / (1 - 2.0 ** (-self.r))

    def V(self, j: int) -> int:
        out = 0
        for l, u in self.levels.items():
            if l >= j:
                out |= u
        return out

    @property
    def bottom(self) -> int:
        return min(self.levels) if self.levels else self.top


def interior_decompose(
    space: FiniteSpace, f, q: float, r: float, *, engine: NormEngine | None = None, region: int | None = None
) -> InteriorDecomposition:
    """Greedy interior decomposition of ``f`` (restricted to ``region``, a local mask)."""
    if r == INF:
        raise InputError("interior decomposition needs a finite r")
    eng = engine or NormEngine(space, f)
    lev = eng.inner(r)
    region = eng.full if region is None else region
    linf = float(lev.maxsize[region])
    if linf == 0:
        return InteriorDecomposition(q, r, region, {}, 0)
    top = top_level(linf, 2.0)
    levels: dict[int, int] = {}
    remaining = region
    j = top - 1
    while remaining:
        if top - j > MAX_LEVELS:
            raise AssertionError("interior decomposition exceeded its level budget")
        u = 0
        while True:
            a = lev.argmax(remaining & ~u)
            if a and gt(lev.size[a], 2.0**j):
                u |= a
            else:
                break
        if u:
            levels[j] = u
            remaining &= ~u
        j -= 1
    glob = {j: eng.to_global(u) for j, u in levels.items()}
    return InteriorDecomposition(q, r, region, levels, top, global_levels=glob)


# -- exterior -----------------------------------------------------------------------------


@dataclass
class ExteriorDecomposition:
    variant: str
    p: float
    q: float
    r: float
    base: float
    K: Fraction
    phi: Fraction
    top: int
    E: dict[int, int] = field(default_factory=dict)  # global masks
    pieces: dict[int, list[int]] = field(default_factory=dict)
    F: dict[int, int] = field(default_factory=dict)
    E1: dict[int, int] = field(default_factory=dict)
    E2: dict[int, int] = field(default_factory=dict)

    @property
    def bottom(self) -> int:
        return min(self.F) if self.F else self.top

    def F_at(self, k: int) -> int:
        if k >= self.top or not self.F:
            return 0
        if k < self.bottom:
            return self.F[self.bottom]
        return self.F[k]


def psi_for(phi, p: float) -> float:
    return float(max(Fraction(phi), Fraction(2))) ** (3.0 / p)


def exterior_decompose(
    space: FiniteSpace,
    f,
    p: float,
    q: float,
    r: float,
    spec: CoveringFunctionSpec,
    variant: str,
    *,
    K=1,
    psi: float | None = None,
    engine: NormEngine | None = None,
) -> ExteriorDecomposition:
    if variant not in VARIANTS:
        raise InputError(f"unknown variant {variant!r}")
    if variant == "qGeqR" and q < r:
        raise InputError("the partition variant needs q >= r")
    eng = engine or NormEngine(space, f)
    lev = eng.outer(q, r)
    base = 2.0
    if variant == "psi":
        base = psi if psi is not None else psi_for(spec.phi, p)
        if not base > 1:
            raise InputError("psi must exceed 1")
    dec = ExteriorDecomposition(variant, p, q, r, base, Fraction(K), spec.phi, 0)
    linf = float(lev.maxsize[eng.full])
    if linf == 0:
        return dec
    dec.top = top_level(linf, base)
    glob = eng.glob
    f_next = 0  # F_{k+1}, global
    union_e = 0  # union of E_l for l > k
    k = dec.top - 1
    while eng.full & ~eng.local(f_next):
        if dec.top - k > MAX_LEVELS:
            raise AssertionError("exterior decomposition exceeded its level budget")
        level = base**k
        pieces: list[int] = []
        e_loc = 0
        if variant == "qGeqR":
            blocked = eng.local(f_next)
            while True:
                a = lev.argmax(eng.full & ~blocked & ~e_loc)
                if a and gt(lev.size[a], level):
                    pieces.append(glob[a])
                    e_loc |= a
                else:
                    break
            e_k = glob[e_loc]
            f_k = f_next | e_k
        else:
            f_kn = f_next
            while True:
                a = lev.argmax(eng.full & ~eng.local(f_kn))
                if a and gt(lev.size[a], level):
                    pieces.append(glob[a])
                    e_loc |= a
                    f_kn = f_next | spec.parent(glob[e_loc])
                else:
                    break
            e_k = glob[e_loc]
            if variant == "canopy":
                f_k = spec.parent(union_e | e_k)
            else:
                inner = spec.parent(f_next | e_k)
                f_k = spec.parent(inner)
                dec.E1[k] = inner & ~f_next
                dec.E2[k] = f_k & ~inner
        if e_k:
            dec.E[k] = e_k
            dec.pieces[k] = pieces
        dec.F[k] = f_k
        union_e |= e_k
        f_next = f_k
        k -= 1
    return dec


# -- verification --------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    level: int | None
    lhs: float
    rhs: float
    ok: bool

    def to_row(self) -> dict:
        return {"check": self.name, "level": self.level, "lhs": self.lhs, "rhs": self.rhs, "ok": self.ok}


@dataclass
class DecompositionReport:
    kind: str
    checks: list[Check] = field(default_factory=list)
    ratios: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    @property
    def violations(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, name, level, lhs, rhs, ok):
        self.checks.append(Check(name, level, float(lhs), float(rhs), bool(ok)))


def quasi_triangle_constant(eng: NormEngine, q: float, r: float) -> float:
    """max over disjoint nonempty P, Q of N(P u Q) / (N(P) + N(Q)); at least 1."""
    norms = eng.inner_norms(q, r)
    allm = np.arange(1 << eng.k)
    best = 1.0
    for u in range(1, 1 << eng.k):
        subs = allm[((allm & ~u) == 0) & (allm != 0) & (allm != u)]
        if subs.size == 0:
            continue
        denom = norms[subs] + norms[u ^ subs]
        best = max(best, float(np.max(norms[u] / denom)))
    return best


def verify_interior(eng: NormEngine, dec: InteriorDecomposition) -> DecompositionReport:
    rep = DecompositionReport("interior")
    lev = eng.inner(dec.r)
    region = dec.region
    seen = 0
    for j, u in sorted(dec.levels.items()):
        rep.add("disjoint", j, popcount(seen & u), 0, not seen & u)
        seen |= u
    rep.add("covers support", None, popcount(region & ~seen), 0, seen == region)
    C, c = dec.C, dec.c
    nu = eng.nu_exact
    for j in range(dec.bottom - 1, dec.top + 1):
        lam = 2.0**j
        u = dec.levels.get(j, 0)
        v_j = dec.V(j)
        if u:
            rep.add("size lower bound", j, lev.size[u], lam, gt(lev.size[u], lam))
        cap = lev.maxsize[region & ~v_j]
        rep.add("Linf cap", j, cap, lam, le(cap, lam))
        sl = lev.measure_exact(region, lam)
        rep.add("covering", j, sl, nu[v_j], sl <= nu[v_j])
        if u:
            slc = lev.measure_exact(region, c * lam)
            rep.add("optimal covering", j, nu[u], C * slc, float(nu[u]) <= C * float(slc) * (1 + 1e-12))
    q = dec.q
    if q != INF:
        normq = lev.integral(region, q)
        s1 = sum(2.0 ** (j * q) * float(nu[u]) for j, u in dec.levels.items())
        s2 = sum(2.0 ** (j * q) * sum(float(nu[u]) for l, u in dec.levels.items() if l >= j) for j in dec.levels)
        rep.ratios = {"norm_q": normq, "sum_U": s1, "sum_tail": s2}
        # m(2^j) <= nu(V_j) <= sum_{l>=j} nu(U_l) gives norm^q <= 2^q * sum_U
        rep.add("norm upper bound", None, normq, 2.0**q * s1, normq <= 2.0**q * s1 * (1 + 1e-9))
    rep.constants = {"C": C, "c": c, "N": dec.N}
    return rep


def verify_exterior(
    eng: NormEngine, dec: ExteriorDecomposition, spec: CoveringFunctionSpec, *, c_delta: float | None = None
) -> DecompositionReport:
    rep = DecompositionReport(f"exterior-{dec.variant}")
    sp = eng.space
    lev = eng.outer(dec.q, dec.r)
    q, b = dec.q, dec.base
    c_delta = c_delta if c_delta is not None else quasi_triangle_constant(eng, q, dec.r)
    K = dec.K
    seen = 0
    for k, e in sorted(dec.E.items()):
        rep.add("disjoint", k, popcount(seen & e), 0, not seen & e)
        seen |= e
    supp = eng.support_mask
    if dec.variant == "qGeqR":
        rep.add("partition of support", None, popcount(seen ^ supp), 0, seen == supp)
    if dec.variant == "psi":
        acc = 0
        ok = True
        for k in dec.F:
            for part in (dec.E1[k], dec.E2[k]):
                ok &= not acc & part
                acc |= part
        rep.add("psi pieces disjoint and cover support", None, popcount(supp & ~acc), 0, ok and not supp & ~acc)
    prev = 0
    for k in range(dec.top - 1, dec.bottom - 1, -1):
        fk = dec.F[k]
        rep.add("nested", k, popcount(prev & ~fk), 0, not prev & ~fk)
        prev = fk
    mu = lambda m: sp.measure("mu", m)  # noqa: E731
    for k in range(dec.bottom - 1, dec.top + 1):
        lam = b**k
        e = dec.E.get(k, 0)
        fk = dec.F_at(k)
        e_loc = eng.local(e)
        if e:
            pieces = dec.pieces[k]
            if dec.variant == "qGeqR":
                nq = [lev.size[eng.local(x)] ** q * float(mu(x)) for x in pieces]
                total = float(eng.inner_norms(q, dec.r)[e_loc]) ** q
                c1 = min(1.0, (total / sum(nq)) ** (1.0 / q))
                a, k_fam = c1, Fraction(1)
            else:
                c1 = float(K) ** (-1.0 / q)
                a, k_fam = 1.0, K
                if len(pieces) > 1 and sum(popcount(x) for x in pieces) <= 14:
                    real = caratheodory_constant(sp, pieces)
                    rep.add("pieces Caratheodory", k, real, K, real <= K)
            rep.add("size lower bound", k, lev.size[e_loc], c1 * lam, gt(lev.size[e_loc], c1 * lam))
            c4 = a / (2 * c_delta)
            C4 = float(k_fam) * (2 * b * c_delta / a) ** q
            sl = lev.measure_exact(eng.full, c4 * lam)
            rep.add("optimal covering", k, mu(e), C4 * float(sl), float(mu(e)) <= C4 * float(sl) * (1 + 1e-12))
        cap = lev.maxsize[eng.full & ~eng.local(fk)]
        rep.add("Linf cap", k, cap, lam, le(cap, lam))
        sl = lev.measure_exact(eng.full, lam)
        rep.add("covering", k, sl, mu(fk), sl <= mu(fk))
    p = dec.p
    if p != INF:
        normp = lev.integral(eng.full, p)
        s_e = sum(b ** (k * p) * float(mu(e)) for k, e in dec.E.items())
        s_f = sum(b ** (k * p) * float(mu(fk)) for k, fk in dec.F.items())
        if dec.F:
            # below the last level F_k stays at F_bottom
            s_f += float(mu(dec.F[dec.bottom])) * b ** (dec.bottom * p) / (b**p - 1)
        rep.ratios = {"norm_p": normp, "sum_E": s_e, "sum_F": s_f}
        # covering property: norm^p <= (b^p - 1) * sum_k b^{kp} mu(F_k), all k
        rep.add("norm upper bound", None, normp, (b**p - 1) * s_f, normp <= (b**p - 1) * s_f * (1 + 1e-9))
        if dec.variant != "psi":
            # mu(F_k) <= phi * sum_{l>=k} mu(E_l), then sum over k geometrically
            phi = 1.0 if dec.variant == "qGeqR" else float(dec.phi)
            lower = normp / (phi * b**p)
            rep.add("pieces lower bound", None, s_e, lower, s_e >= lower * (1 - 1e-9))
    rep.constants = {"C_delta": c_delta, "base": b, "K": float(K)}
    return rep


def verify_decomposition(space: FiniteSpace, f, dec, *, engine: NormEngine | None = None, spec=None) -> DecompositionReport:
    eng = engine or NormEngine(space, f)
    if isinstance(dec, InteriorDecomposition):
        return verify_interior(eng, dec)
    if spec is None:
        raise InputError("exterior verification needs the covering function")
    return verify_exterior(eng, dec, spec)


def decomposition_json(dec, report: DecompositionReport | None = None) -> dict:
    """``{variant, psiBase?, levels: [{k, E, F, properties}]}`` with masks in hex."""
    by_level: dict = {}
    if report is not None:
        for c in report.checks:
            if c.level is not None:
                by_level.setdefault(c.level, {})[c.name] = {"lhs": c.lhs, "rhs": c.rhs, "ok": c.ok}
    if isinstance(dec, InteriorDecomposition):
        levels = [
            {"j": j, "U": hex(u), "properties": by_level.get(j, {})}
            for j, u in sorted(dec.global_levels.items(), reverse=True)
        ]
        out = {"variant": "interior", "levels": levels}
    else:
        levels = []
        for k in range(dec.top - 1, dec.bottom - 1, -1):
            entry = {"k": k, "E": hex(dec.E.get(k, 0)), "F": hex(dec.F[k]), "properties": by_level.get(k, {})}
            if dec.variant == "psi":
                entry["E1"] = hex(dec.E1[k])
                entry["E2"] = hex(dec.E2[k])
            levels.append(entry)
        out = {"variant": dec.variant, "levels": levels}
        if dec.variant == "psi":
            out["psiBase"] = dec.base
    if report is not None:
        out["ok"] = report.ok
        out["ratios"] = report.ratios
        out["constants"] = report.constants
        out["global"] = [c.to_row() for c in report.checks if c.level is None]
    return out
