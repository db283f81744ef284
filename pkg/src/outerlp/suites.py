"""Seeded corpora and the property suites run over them.

Each suite returns a ``SuiteResult``: one row per instance (ready for CSV),
the witnesses of any failure, and a summary with the realized envelope.
Instances are generated from their seed alone, so a suite's output depends
only on its configuration.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .conditions import canopy_check, crop_check, parent_function_check
from .decompose import (
    VARIANTS,
    exterior_decompose,
    interior_decompose,
    quasi_triangle_constant,
    verify_exterior,
    verify_interior,
)
from .duality import build_dual, envelope_row, pairing_sup_search, triangle_defect, verify_duality
from .norms import Inner, NormEngine, Outer
from .oracle import Oracle
from .settings import (
    Setting,
    first_family_closed_form,
    make_cartesian,
    make_counterexample_first,
    make_counterexample_second,
    make_three_measures,
    second_family_bound,
)
from .space import (
    FiniteSpace,
    InputError,
    caratheodory_constant,
    iter_bits,
    iter_submasks,
    popcount,
    random_space,
)

SUITES = ("collapse", "holder", "triangle", "decompose", "dyadic-geometry", "oracle", "levelset")


@dataclass
class SuiteConfig:
    seeds: int = 100
    seed0: int = 0
    budget: int = 8
    exponents: list[tuple[float, float, float]] | None = None
    exact_limit: int | None = None
    J: int = 1
    samples: int = 1000
    psi: float | None = None


@dataclass
class SuiteResult:
    name: str
    rows: list[dict] = field(default_factory=list)
    witnesses: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "summary": self.summary, "witnesses": self.witnesses}


# -- instance generators ----------------------------------------------------------------


def random_function(n: int, seed: int, density: float = 0.85) -> np.ndarray:
    """Nonnegative, not identically zero, with a random power-law spread."""
    rng = np.random.default_rng(seed)
    f = rng.uniform(0.0, 2.0, n) ** rng.uniform(1.0, 4.0) * (rng.random(n) < density)
    if not f.any():
        f[int(rng.integers(n))] = 1.0
    return f


def structured_setting(seed: int) -> Setting:
    """Alternate between three measures (n = 3..6) and small cartesian products."""
    if seed % 2:
        return make_three_measures(3 + seed % 4, seed)
    sizes = [(1, 2, 2), (2, 2, 2), (3, 2, 2), (2, 3, 2), (2, 2, 3)][(seed // 2) % 5]
    return make_cartesian(sizes, seed=seed)


# -- counterexample families ------------------------------------------------------------


def counterexample_rows(family: str, ms, p: float, q: float, r: float) -> list[dict]:
    """Exact norms of 1_X on the blow-up families with closed-form references."""
    rows = []
    for m in ms:
        if family == "first":
            st = make_counterexample_first(m)
        elif family == "second":
            st = make_counterexample_second(m, Fraction(r).limit_denominator(64))
        else:
            raise InputError(f"unknown family {family!r}")
        sp = st.space
        eng = NormEngine(sp, np.ones(sp.n))
        single = eng.norm(q, Inner(r))
        double = eng.norm(p, Outer(q, r))
        ref_single = m ** (1.0 / r)
        if family == "first":
            if p == 1 and q == 1:
                ref_double = float(m)
            elif 1 <= r <= q:
                ref_double = first_family_closed_form(m, p, q, r)
            else:
                ref_double = None
            bound = None
        else:
            beta = st.reference["beta"]
            ref_double = st.reference["double_norm"] if p == 1 and q == 1 else None
            bound = second_family_bound(m, beta) if p == 1 and q == 1 else None
        rows.append(
            {
                "family": family,
                "m": m,
                "p": p,
                "q": q,
                "r": r,
                "single": single,
                "single_ref": ref_single,
                "double": double,
                "double_ref": ref_double,
                "bound": bound,
                "ratio": double / single,
            }
        )
    return rows


def growth_slope(p: float, q: float, r: float, ms=range(2, 11)) -> float:
    """Least-squares slope of log ||1_X|| against log m on the first family."""
    rows = counterexample_rows("first", ms, p, q, r)
    x = np.log([row["m"] for row in rows])
    y = np.log([row["double"] for row in rows])
    return float(np.polyfit(x, y, 1)[0])


# -- oracle equivalence -----------------------------------------------------------------


ORACLE_EXPONENTS = [(1.0, 1.0, 1.0), (2.0, 3.0, 2.0), (2.0, 1.5, 3.0), (0.5, 2.0, 1.0), (3.0, 2.0, math.inf)]


def oracle_suite(cfg: SuiteConfig) -> SuiteResult:
    res = SuiteResult("oracle")
    worst = 0.0
    for seed in range(cfg.seed0, cfg.seed0 + cfg.seeds):
        n = 2 + seed % 5
        sp = random_space(n, seed)
        f = random_function(n, seed)
        p, q, r = ORACLE_EXPONENTS[seed % len(ORACLE_EXPONENTS)]
        orc = Oracle(sp)
        eng = NormEngine(sp, f)
        h = tuple(float(x) for x in f)
        got = eng.norm(p, Outer(q, r))
        want = orc.double_norm(h, p, q, r)
        got1 = eng.norm(q, Inner(r))
        want1 = orc.single_norm(h, q, r)
        err = max(abs(got - want) / max(want, 1e-300), abs(got1 - want1) / max(want1, 1e-300))
        # super-level measures at every oracle level and just above
        pairs = orc.double_pairs(h, q, r)
        levels = sorted({i for i, _ in pairs})
        lev_err = 0
        for lam in levels + [x * (1 + 1e-6) for x in levels]:
            m_eng, _ = eng.super_level(Outer(q, r), lam)
            if m_eng != orc.level_measure(pairs, lam):
                lev_err += 1
        worst = max(worst, err)
        ok = err <= 1e-9 and lev_err == 0
        row = {"seed": seed, "n": n, "p": p, "q": q, "r": r, "engine": got, "oracle": want, "rel_err": err, "level_mismatch": lev_err}
        res.rows.append(row)
        if not ok:
            res.witnesses.append(row)
    res.summary = {"instances": cfg.seeds, "max_rel_err": worst}
    return res


# -- level-set orthogonality ------------------------------------------------------------


def levelset_instance(space: FiniteSpace, f: np.ndarray, collection, r: float):
    """Check m_B(K^{1/r} lam) <= sum_A m_A(lam) <= K m_B(lam) at every relevant lam.

    All three profiles are right-continuous step functions, so checking the
    midpoints between consecutive candidate levels (and one level above the
    last) covers every lam > 0. Returns (K, violations, levels checked).
    """
    K = caratheodory_constant(space, collection)
    union = 0
    for a in collection:
        union |= a
    g = np.where([union >> i & 1 for i in range(space.n)], f, 0.0)
    eng = NormEngine(space, g)
    size = Inner(r)
    kr = float(K) ** (1.0 / r) if r != math.inf else 1.0
    prof_b = eng.profile(size)
    profs = [eng.profile(size, eng.local(a)) for a in collection]
    cands = {0.0}
    cands.update(prof_b.breakpoints)
    cands.update(x / kr for x in prof_b.breakpoints)
    for pr in profs:
        cands.update(pr.breakpoints)
    pts = sorted(cands)
    lams = [(a + b) / 2 for a, b in zip(pts, pts[1:])] + [pts[-1] * 2 + 1]
    bad = []
    for lam in lams:
        total = sum((pr.at(lam) if pr.plateaus else Fraction(0)) for pr in profs)
        left = prof_b.at(kr * lam) if prof_b.plateaus else Fraction(0)
        right = K * (prof_b.at(lam) if prof_b.plateaus else Fraction(0))
        if left > total or total > right:
            bad.append({"lam": lam, "m_B_scaled": str(left), "sum_A": str(total), "K_m_B": str(right)})
    return K, bad, len(lams)


def levelset_suite(cfg: SuiteConfig) -> SuiteResult:
    res = SuiteResult("levelset")
    for seed in range(cfg.seed0, cfg.seed0 + cfg.seeds):
        rng = random.Random(seed)
        n = 3 + seed % 5
        sp = random_space(n, seed)
        f = random_function(n, seed + 7919)
        # random partition of a random subset into 2..4 blocks
        nb = rng.randint(2, 4)
        blocks = [0] * nb
        for i in range(n):
            slot = rng.randint(-1, nb - 1)
            if slot >= 0:
                blocks[slot] |= 1 << i
        coll = [b for b in blocks if b]
        if len(coll) < 2:
            coll = [1, 2]
        r = [1.0, 2.0, 3.0, math.inf][seed % 4]
        K, bad, checked = levelset_instance(sp, f, coll, r)
        row = {"seed": seed, "n": n, "r": r, "K": str(K), "blocks": len(coll), "levels": checked, "violations": len(bad)}
        res.rows.append(row)
        if bad:
            res.witnesses.append({**row, "first": bad[0]})
    res.summary = {"instances": cfg.seeds, "max_K": max(Fraction(r["K"]) for r in res.rows).__str__()}
    return res


# -- decompositions -----------------------------------------------------------------------


DECOMP_EXPONENTS = [(2.0, 2.0, 3.0), (2.0, 3.0, 2.0), (1.0, 2.0, 1.0), (3.0, 1.5, 2.0), (2.0, 4.0, 1.5)]


def decompose_suite(cfg: SuiteConfig) -> SuiteResult:
    res = SuiteResult("decompose")
    exps = cfg.exponents or DECOMP_EXPONENTS
    for seed in range(cfg.seed0, cfg.seed0 + cfg.seeds):
        st = structured_setting(seed)
        sp = st.space
        f = random_function(sp.n, seed)
        eng = NormEngine(sp, f)
        p, q, r = exps[seed % len(exps)]
        c_delta = quasi_triangle_constant(eng, q, r)
        reports = [verify_interior(eng, interior_decompose(sp, f, q, r, engine=eng))]
        for variant in VARIANTS:
            if variant == "qGeqR" and q < r:
                continue
            dec = exterior_decompose(sp, f, p, q, r, st.covering, variant, K=st.K, psi=cfg.psi, engine=eng)
            reports.append(verify_exterior(eng, dec, st.covering, c_delta=c_delta))
        for rep in reports:
            row = {
                "seed": seed,
                "setting": st.kind,
                "n": sp.n,
                "p": p,
                "q": q,
                "r": r,
                "kind": rep.kind,
                "checks": len(rep.checks),
                "violations": len(rep.violations),
                "C_delta": c_delta,
            }
            res.rows.append(row)
            for v in rep.violations:
                res.witnesses.append({**row, **v.to_row(), "function": [float(x) for x in f]})
    res.summary = {
        "instances": cfg.seeds,
        "checks": sum(r["checks"] for r in res.rows),
        "max_C_delta": max(r["C_delta"] for r in res.rows),
    }
    return res


# -- duality --------------------------------------------------------------------------------


HOLDER_EXPONENTS = [(2.0, 2.0, 3.0), (2.0, 3.0, 2.0), (3.0, 2.0, 4.0)]


def condition_verdict(st: Setting, q: float, r: float, seed: int):
    """The condition the dual construction needs for this exponent pair."""
    if q > r:
        return crop_check(st.space, st.covering, st.K, budget=256, seed=seed)
    return canopy_check(st.space, st.covering, st.K, budget=400, d_budget=32, seed=seed)


def holder_suite(cfg: SuiteConfig) -> SuiteResult:
    res = SuiteResult("holder")
    exps = cfg.exponents or HOLDER_EXPONENTS
    for seed in range(cfg.seed0, cfg.seed0 + cfg.seeds):
        st = structured_setting(seed)
        sp = st.space
        f = random_function(sp.n, seed)
        verdicts: dict[bool, object] = {}
        for p, q, r in exps:
            if (q > r) not in verdicts:
                verdicts[q > r] = condition_verdict(st, q, r, seed)
            verdict = verdicts[q > r]
            if not verdict.holds:
                res.witnesses.append({"seed": seed, "p": p, "q": q, "r": r, "condition": verdict.to_json()})
                continue
            wit = build_dual(sp, f, p, q, r, st.covering, K=st.K)
            rep = verify_duality(sp, f, wit, spec=st.covering)
            sup = pairing_sup_search(sp, f, p, q, r, cfg.budget, spec=st.covering, K=st.K, seed=seed)
            norm = rep.lhs ** (1.0 / p)
            row = envelope_row(seed, sp.n, p, q, r, rep)
            row["sup_ratio"] = sup / norm
            row["c_bound"] = rep.c_bound
            row["links_ok"] = rep.links_ok
            res.rows.append(row)
            if not (rep.links_ok and rep.holds_within_envelope and math.isfinite(row["sup_ratio"])):
                res.witnesses.append({**row, "links": [l for l in rep.links if not l["ok"]]})
    if res.rows:
        res.summary = {
            "instances": cfg.seeds,
            "min_c_lower": min(r["c_lower"] for r in res.rows),
            "max_C_upper": max(r["C_upper"] for r in res.rows),
            "sup_ratio_envelope": [min(r["sup_ratio"] for r in res.rows), max(r["sup_ratio"] for r in res.rows)],
        }
    return res


def triangle_suite(cfg: SuiteConfig) -> SuiteResult:
    """||sum f_n|| / sum ||f_n|| on structured settings.

    With g the dual witness of F = sum f_n and h_n = <f_n, g> / (||f_n|| ||g||),
    the ratio is at most max h_n / h_F exactly; the suite checks that link and
    records the envelope.
    """
    res = SuiteResult("triangle")
    exps = cfg.exponents or HOLDER_EXPONENTS
    for seed in range(cfg.seed0, cfg.seed0 + cfg.seeds):
        st = structured_setting(seed)
        sp = st.space
        rng = random.Random(seed)
        fs = [random_function(sp.n, seed * 31 + i, density=0.5) for i in range(rng.randint(2, 4))]
        total = np.sum(fs, axis=0)
        for p, q, r in exps:
            ratio = triangle_defect(sp, fs, p, q, r)
            wit = build_dual(sp, total, p, q, r, st.covering, K=st.K)
            rep = verify_duality(sp, total, wit, spec=st.covering)
            gn = rep.dual_norm ** (1.0 / wit.duals[0])
            w = sp.omega_float
            hs = []
            for f in fs:
                e = NormEngine(sp, f)
                nf = e.norm(p, Outer(q, r))
                hs.append(float(np.sum(f * wit.g * w)) / (nf * gn) if nf > 0 else 0.0)
            bound = max(hs) / rep.sharpness
            row = {"seed": seed, "n": sp.n, "p": p, "q": q, "r": r, "summands": len(fs), "ratio": ratio, "bound": bound}
            res.rows.append(row)
            if not (math.isfinite(ratio) and ratio <= bound * (1 + 1e-9)):
                res.witnesses.append(row)
    res.summary = {"instances": cfg.seeds, "max_ratio": max(r["ratio"] for r in res.rows)}
    return res


# -- collapse at q = r -------------------------------------------------------------------


COLLAPSE_EXPONENTS = [1.0, 1.5, 2.0, 3.0]
COLLAPSE_C = 16.0


def collapse_suite(cfg: SuiteConfig, C: float = COLLAPSE_C) -> SuiteResult:
    res = SuiteResult("collapse")
    for seed in range(cfg.seed0, cfg.seed0 + cfg.seeds):
        n = 3 + seed % 6
        sp = random_space(n, seed)
        f = random_function(n, seed)
        eng = NormEngine(sp, f)
        q = COLLAPSE_EXPONENTS[seed % len(COLLAPSE_EXPONENTS)]
        double = eng.norm(q, Outer(q, q))
        single = eng.norm(q, Inner(q))
        ratio = double / single
        row = {"seed": seed, "n": n, "q": q, "r": q, "double": double, "single": single, "ratio": ratio}
        res.rows.append(row)
        if not 1 / C <= ratio <= C:
            res.witnesses.append(row)
    ratios = [r["ratio"] for r in res.rows]
    by_n = {}
    for r in res.rows:
        lo, hi = by_n.get(r["n"], (math.inf, 0.0))
        by_n[r["n"]] = (min(lo, r["ratio"]), max(hi, r["ratio"]))
    res.summary = {
        "instances": cfg.seeds,
        "envelope": max(max(ratios), 1 / min(ratios)),
        "C": C,
        "by_n": {str(k): v for k, v in sorted(by_n.items())},
    }
    return res


# -- dyadic geometry -------------------------------------------------------------------------


def dyadic_geometry_suite(cfg: SuiteConfig) -> SuiteResult:
    """Intersection calculus, generator values, additivity, covering conditions
    and structured measures against the subset DP."""
    from .dyadic import make_dyadic_discrete, strip_intersection, strip_tree_intersection

    res = SuiteResult("dyadic-geometry")
    J = cfg.J
    st = make_dyadic_discrete(J)
    sp = st.space
    rng = random.Random(cfg.seed0)
    exhaustive = J == 1
    strips = sorted(st.strips)
    trees = sorted(st.trees)

    def fail(check, **kw):
        res.witnesses.append({"check": check, **{k: str(v) for k, v in kw.items()}})

    def pairs(a, b):
        if exhaustive:
            return itertools.product(a, b)
        return ((rng.choice(a), rng.choice(b)) for _ in range(cfg.samples))

    counts = {}
    # strip / strip: nested or disjoint, intersection is the smaller strip
    c = 0
    for s1, s2 in pairs(strips, strips):
        c += 1
        inter = strip_intersection(s1, s2)
        want = st.strip_mask(s1) & st.strip_mask(s2)
        got = st.strip_mask(inter) if inter is not None else 0
        if got != want:
            fail("strip-strip", a=s1, b=s2)
    counts["strip-strip"] = c
    # strip / tree: intersection is a tree
    c = 0
    for s, t in pairs(strips, trees):
        c += 1
        inter = strip_tree_intersection(s, t)
        want = st.strip_mask(s) & st.tree_mask(t)
        got = st.tree_mask(inter) if inter is not None else 0
        if got != want:
            fail("strip-tree", strip=s, tree=t)
    counts["strip-tree"] = c
    # generator values under both evaluators
    gens = [("mu", m, v) for m, v in sp.mu_gen] + [("nu", m, v) for m, v in sp.nu_gen]
    if not exhaustive:
        gens = rng.sample(gens, min(len(gens), cfg.samples))
    for which, m, v in gens:
        if sp.measure(which, m) != v or sp.measure_dp(which, m) != v:
            fail("generator value", which=which, mask=hex(m), value=v)
    counts["generators"] = len(gens)
    # additivity of mu' on disjoint strips and of nu' on a tree cut by disjoint strips
    c = 0
    trials = 200 if exhaustive else cfg.samples // 5
    strip_masks = [m for m, _ in sp.mu_gen]
    for _ in range(trials):
        chosen, used = [], 0
        for m in rng.sample(strip_masks, len(strip_masks)):
            if not m & used and rng.random() < 0.5:
                chosen.append(m)
                used |= m
        if not chosen:
            continue
        c += 1
        if sp.measure("mu", used) != sum(sp.measure("mu", m) for m in chosen):
            fail("mu additivity", strips=[hex(m) for m in chosen])
        t = st.tree_mask(rng.choice(trees))
        if sp.measure("nu", t & used) != sum(sp.measure("nu", t & m) for m in chosen):
            fail("nu additivity", tree=hex(t), strips=[hex(m) for m in chosen])
    counts["additivity"] = c
    # covering function and conditions
    verdicts = [
        parent_function_check(sp, st.covering),
        canopy_check(sp, st.covering, 2, budget=300 if exhaustive else 20, d_budget=20 if exhaustive else 4,
                     seed=cfg.seed0, samples=256 if exhaustive else 32),
        crop_check(sp, st.covering, 1, budget=64 if exhaustive else 8, seed=cfg.seed0, samples=256 if exhaustive else 32),
    ]
    for v in verdicts:
        if not v.holds:
            fail(v.condition, witness=v.witness)
    counts["conditions"] = {v.condition: v.status for v in verdicts}
    # structured evaluators against the subset DP; both are additive over the
    # connected components of the generators, so components suffice
    c = 0
    for which in ("mu", "nu"):
        comps = sp.components(which)
        for comp in comps:
            if exhaustive and popcount(comp) <= 16:
                masks = iter_submasks(comp)
            else:
                bits = list(iter_bits(comp))
                masks = (sum(1 << b for b in bits if rng.random() < 0.5) for _ in range(max(1, cfg.samples // len(comps))))
            for a in masks:
                c += 1
                if sp.measure(which, a) != sp.measure_dp(which, a):
                    fail("structured vs dp", which=which, mask=hex(a))
    counts["structured-vs-dp"] = c
    res.summary = {"J": J, "exhaustive": exhaustive, "counts": counts}
    res.rows.append({"J": J, **{k: str(v) for k, v in counts.items()}, "failures": len(res.witnesses)})
    return res


RUNNERS = {
    "collapse": collapse_suite,
    "holder": holder_suite,
    "triangle": triangle_suite,
    "decompose": decompose_suite,
    "dyadic-geometry": dyadic_geometry_suite,
    "oracle": oracle_suite,
    "levelset": levelset_suite,
}


def run_suite(name: str, cfg: SuiteConfig) -> SuiteResult:
    if name not in RUNNERS:
        raise InputError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return RUNNERS[name](cfg)


__all__ = [
    "SuiteConfig",
    "SuiteResult",
    "counterexample_rows",
    "growth_slope",
    "levelset_instance",
    "random_function",
    "run_suite",
    "structured_setting",
]
