"""Dualizing functions for the double iterated norm and the checks around them.

For f >= 0 the witness is

    g = f^{r-1} * sum_k 2^{k(p-q)} sum_j 2^{j(q-r)} 1_{W_kj},

built on f normalised so that its outer L^infinity size is 2, then rescaled
so that <f, g> and ||g||^{p'} both scale like ||f||^p.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .conditions import CaratheodoryOracle, CoveringFunctionSpec, crop_subcollection
from .decompose import (
    ExteriorDecomposition,
    InteriorDecomposition,
    exterior_decompose,
    interior_decompose,
    verify_exterior,
)
from .norms import INF, Inner, NormEngine, Outer, as_function
from .space import FiniteSpace, InputError, iter_bits, to_fraction


class SingleIteratedCase(InputError):
    """q == r: the double norm reduces to a single iterated one."""


class CropFailure(RuntimeError):
    """No admissible crop subcollection was found for some block."""


def dual_exponent(p: float) -> float:
    if p == INF:
        return 1.0
    if p == 1:
        return INF
    return p / (p - 1)


@dataclass
class Block:
    k: int
    j: int
    U: int
    W: int
    cropped: tuple[int, ...] = ()  # the discarded family G_kj (global masks)

    def to_json(self) -> dict:
        return {"k": self.k, "j": self.j, "U": hex(self.U), "W": hex(self.W), "G": [hex(g) for g in self.cropped]}


@dataclass
class DualWitness:
    g: np.ndarray
    blocks: list[Block]
    exponents: tuple[float, float, float]
    duals: tuple[float, float, float]
    scale: float  # f = scale * f_tilde
    M: int | None = None
    K: Fraction = Fraction(1)
    phi: Fraction = Fraction(1)
    exterior: ExteriorDecomposition | None = None
    interiors: dict[int, InteriorDecomposition] = field(default_factory=dict)
    single_iterated: bool = False

    def g_tilde(self) -> np.ndarray:
        p = self.exponents[0]
        return self.g / self.scale ** (p - 1) if self.scale else self.g

    def to_json(self) -> dict:
        return {
            "g": [float(x) for x in self.g],
            "blocks": [b.to_json() for b in self.blocks],
            "exponents": list(self.exponents),
            "duals": list(self.duals),
            "scale": self.scale,
            "M": self.M,
        }


def _check_exponents(p, q, r):
    for name, v in (("p", p), ("q", q), ("r", r)):
        if not (1 < v < INF):
            raise InputError(f"{name} must lie in (1, inf), got {v}")


def _crop_family(space: FiniteSpace, spec: CoveringFunctionSpec, ft: np.ndarray, U: int, r: float, cut: float) -> list[int]:
    """Members F of the family with l^r size of f 1_U on F at most ``cut``."""
    fam = spec.family
    if fam is None:
        if space.n > 12:
            raise InputError("crop selection over all subsets needs n <= 12")
        fam = range(1, 1 << space.n)
    w = space.omega_float
    out = []
    for F in fam:
        pts = list(iter_bits(F & U))
        mass = float(np.sum(ft[pts] ** r * w[pts])) if pts else 0.0
        nu = float(space.measure("nu", F))
        if mass == 0.0 or (nu > 0 and (mass / nu) ** (1.0 / r) <= cut * (1 + 1e-12)):
            out.append(F)
    return out


def build_dual(
    space: FiniteSpace,
    f,
    p: float,
    q: float,
    r: float,
    spec: CoveringFunctionSpec,
    *,
    K=1,
    single_iterated: bool = False,
) -> DualWitness:
    """Candidate dualizing function for ``f`` (nonnegative) in L^p(l^q(l^r))."""
    _check_exponents(p, q, r)
    if q == r and not single_iterated:
        raise SingleIteratedCase("q == r: pass single_iterated=True for the single iterated construction")
    K = to_fraction(K)
    f = as_function(space, f)
    if np.any(f < 0):
        raise InputError("the dual construction needs a nonnegative function")
    duals = (dual_exponent(p), dual_exponent(q), dual_exponent(r))
    eng0 = NormEngine(space, f)
    linf = float(eng0.outer(q, r).maxsize[eng0.full])
    if linf == 0:
        return DualWitness(np.zeros(space.n), [], (p, q, r), duals, 0.0, K=K, phi=spec.phi, single_iterated=q == r)
    scale = linf / 2
    ft = f / scale
    eng = NormEngine(space, ft)
    variant = "canopy" if q < r else "qGeqR"
    ext = exterior_decompose(space, ft, p, q, r, spec, variant, K=K, engine=eng)
    M = 2 + math.floor(math.log2(float(K)) / r) if q > r else None
    cara = CaratheodoryOracle(space, K) if q > r else None
    blocks: list[Block] = []
    interiors: dict[int, InteriorDecomposition] = {}
    gt_ = np.zeros(space.n)
    for k, e in sorted(ext.E.items()):
        if q == r:
            # interior level trivialised: one block at j = 0
            blocks.append(Block(k, 0, e, e))
            continue
        dec = interior_decompose(space, ft, q, r, engine=eng, region=eng.local(e))
        interiors[k] = dec
        for j, u_loc in sorted(dec.levels.items()):
            U = eng.to_global(u_loc)
            if q < r:
                blocks.append(Block(k, j, U, U))
                continue
            fam = _crop_family(space, spec, ft, U, r, 2.0 ** (j - M))
            G = crop_subcollection(space, spec, fam, K, cara=cara)
            if G is None:
                raise CropFailure(f"no crop subcollection for block k={k}, j={j}")
            removed = 0
            for x in G:
                removed |= x
            blocks.append(Block(k, j, U, U & ~removed, tuple(G)))
    for b in blocks:
        coeff = 2.0 ** (b.k * (p - q)) * 2.0 ** (b.j * (q - r))
        pts = list(iter_bits(b.W))
        gt_[pts] += coeff * ft[pts] ** (r - 1)
    return DualWitness(
        gt_ * scale ** (p - 1), blocks, (p, q, r), duals, scale, M, K, spec.phi, ext, interiors, q == r
    )


def replay_dual(space: FiniteSpace, f, witness: DualWitness) -> np.ndarray:
    """Recompute g from the stored blocks, independently of ``build_dual``'s loop order."""
    p, q, r = witness.exponents
    f = as_function(space, f)
    if witness.scale == 0:
        return np.zeros(space.n)
    ft = f / witness.scale
    out = np.zeros(space.n)
    for i in range(space.n):
        total = sum(2.0 ** (b.k * (p - q) + b.j * (q - r)) for b in witness.blocks if b.W >> i & 1)
        out[i] = ft[i] ** (r - 1) * total if total else 0.0
    return out * witness.scale ** (p - 1)


# -- reports ------------------------------------------------------------------------------


@dataclass
class DualityReport:
    pairing: float
    lhs: float  # ||f||^p
    dual_norm: float  # ||g||^{p'}
    c_lower: float  # pairing / ||f||^p
    C_upper: float  # ||g||^{p'} / ||f||^p
    sharpness: float  # pairing / (||f|| ||g||)
    c_bound: float  # traced lower constant for this instance
    C_bound: float = INF  # envelope cap for C_upper
    links: list[dict] = field(default_factory=list)

    @property
    def links_ok(self) -> bool:
        return all(l["ok"] for l in self.links)

    @property
    def holds_within_envelope(self) -> bool:
        if self.lhs == 0:
            return self.pairing == 0 and self.dual_norm == 0
        return (
            self.c_lower >= self.c_bound * (1 - 1e-9)
            and math.isfinite(self.C_upper)
            and self.C_upper <= self.C_bound
        )

    def to_json(self) -> dict:
        return {
            "pairing": self.pairing,
            "lhs": self.lhs,
            "dualNorm": self.dual_norm,
            "c_lower": self.c_lower,
            "C_upper": self.C_upper,
            "sharpness": self.sharpness,
            "c_bound": self.c_bound,
            "C_bound": self.C_bound if math.isfinite(self.C_bound) else None,
            "holdsWithinEnvelope": self.holds_within_envelope,
            "links": self.links,
        }


def double_norm_power(space: FiniteSpace, f, p: float, q: float, r: float) -> float:
    """||f||^p in L^p_mu(l^q_nu(l^r_omega)); for p = inf the norm itself."""
    f = as_function(space, f)
    if not np.any(f):
        return 0.0
    eng = NormEngine(space, f)
    val = eng.norm(p, Outer(q, r))
    return val if p == INF else val**p


def verify_duality(
    space: FiniteSpace, f, witness: DualWitness, *, spec: CoveringFunctionSpec | None = None, C_bound: float = INF
) -> DualityReport:
    """Both sides of the sharpness statement plus each link of the lower-bound chain."""
    p, q, r = witness.exponents
    pd, qd, rd = witness.duals
    f = as_function(space, f)
    g = witness.g
    pairing = float(np.sum(f * g * space.omega_float))
    if witness.scale == 0:
        return DualityReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, C_bound)
    lhs = double_norm_power(space, f, p, q, r)
    dual = double_norm_power(space, g, pd, qd, rd)
    c_lower = pairing / lhs
    C_upper = dual / lhs
    sharp = pairing / (lhs ** (1 / p) * dual ** (1 / pd)) if dual > 0 else 0.0

    links: list[dict] = []
    s = witness.scale
    ft = f / s
    w = space.omega_float
    pairing_t = pairing / s**p
    lhs_t = lhs / s**p
    K = float(witness.K)
    if witness.single_iterated:
        # one block per E_k: the pairing is sum_k 2^{k(p-q)} ||f 1_{E_k}||_{L^q}^q exactly,
        # and kappa = min_k ||f 1_{E_k}||_{L^q}^q / ||f 1_{E_k}||_{L^q_nu(l^q)}^q is traced
        c7 = 1.0
        masses = {}
        kappa = INF
        eng_k = NormEngine(space, ft)
        for b in witness.blocks:
            pts = list(iter_bits(b.W))
            masses[b.k] = float(np.sum(ft[pts] ** q * w[pts]))
            single = eng_k.norm(q, Inner(q), eng_k.local(b.U)) ** q
            kappa = min(kappa, masses[b.k] / single if single > 0 else INF)
        links.append({"link": "mass vs single norm", "realized": kappa, "bound": 0.0, "ok": bool(0 < kappa < INF)})
        block_sum = sum(2.0 ** (k * (p - q)) * m for k, m in masses.items())
    else:
        # link 1: mass on W_kj against 2^{jr} nu(U_kj)
        c7 = 1.0 if q <= r else 1.0 - K * 2.0 ** (-witness.M * r)
        worst = INF
        for b in witness.blocks:
            pts = list(iter_bits(b.W))
            mass = float(np.sum(ft[pts] ** r * w[pts]))
            nu_u = float(space.measure("nu", b.U))
            ratio = mass / (2.0 ** (b.j * r) * nu_u) if nu_u > 0 else INF
            worst = min(worst, ratio)
        links.append({"link": "block mass", "realized": worst, "bound": c7, "ok": bool(worst >= c7 * (1 - 1e-9))})
        # link 2: pairing against sum_k 2^{k(p-q)} sum_j 2^{jq} nu(U_kj)
        block_sum = sum(2.0 ** (b.k * (p - q) + b.j * q) * float(space.measure("nu", b.U)) for b in witness.blocks)
    realized2 = pairing_t / block_sum if block_sum else INF
    links.append({"link": "pairing vs blocks", "realized": realized2, "bound": c7, "ok": bool(realized2 >= c7 * (1 - 1e-9))})
    # link 3: blocks against sum_k 2^{kp} mu(E_k)
    ext = witness.exterior
    eng = NormEngine(space, ft)
    c1 = 1.0
    phi = 1.0 if witness.single_iterated or q > r else float(witness.phi)
    if ext is not None and ext.E:
        e_sum = sum(2.0 ** (k * p) * float(space.measure("mu", e)) for k, e in ext.E.items())
        realized3 = block_sum / e_sum
        if spec is not None:
            rep = verify_exterior(eng, ext, spec)
            links.append({"link": "exterior decomposition", "realized": float(rep.ok), "bound": 1.0, "ok": rep.ok})
        if q > r or witness.single_iterated:
            # realized c1 of the union step: min over levels of N(E_k) / (2^k mu(E_k)^{1/q})
            nq = eng.inner_norms(q, r)
            lows = [
                float(nq[eng.local(e)]) / (2.0**k * float(space.measure("mu", e)) ** (1 / q)) for k, e in ext.E.items()
            ]
            c1 = min(1.0, min(lows))
        else:
            c1 = float(witness.K) ** (-1 / q)
        interior_c = kappa if witness.single_iterated else 2.0 ** (-q)
        bound3 = interior_c * c1**q
        links.append({"link": "blocks vs exterior", "realized": realized3, "bound": bound3, "ok": bool(realized3 >= bound3 * (1 - 1e-9))})
        realized4 = e_sum / lhs_t
        bound4 = 1.0 / (phi * 2.0**p)
        links.append({"link": "exterior vs norm", "realized": realized4, "bound": bound4, "ok": bool(realized4 >= bound4 * (1 - 1e-9))})
        c_bound = c7 * bound3 * bound4
    else:
        c_bound = 0.0
    links.append({"link": "dual norm finite", "realized": C_upper, "bound": INF, "ok": bool(math.isfinite(C_upper))})
    return DualityReport(pairing, lhs, dual, c_lower, C_upper, sharp, c_bound, C_bound, links)


# -- triangle and sup search --------------------------------------------------------------


def triangle_defect(space: FiniteSpace, fs, p: float, q: float, r: float) -> float:
    """||sum f_n|| / sum ||f_n||; 1.0 when every summand vanishes."""
    fs = [as_function(space, f) for f in fs]
    if not fs:
        raise InputError("triangle_defect needs at least one function")
    parts = [double_norm_power(space, f, INF if p == INF else p, q, r) for f in fs]
    if p != INF:
        parts = [x ** (1 / p) for x in parts]
    denom = sum(parts)
    if denom == 0:
        return 1.0
    total = double_norm_power(space, np.sum(fs, axis=0), p, q, r)
    if p != INF:
        total = total ** (1 / p)
    return total / denom


def _norm(space, g, p, q, r) -> float:
    v = double_norm_power(space, g, p, q, r)
    return v if p == INF else v ** (1 / p)


def pairing_sup_search(
    space: FiniteSpace,
    f,
    p: float,
    q: float,
    r: float,
    budget: int,
    *,
    spec: CoveringFunctionSpec | None = None,
    K=1,
    seed: int = 0,
) -> float:
    """Lower estimate of sup <f, g> over ||g||_{L^{p'}(l^{q'}(l^{r'}))} = 1.

    Candidates: the built dual witness (when it can be built) and ``budget``
    random nonnegative functions on the support of f. Every candidate gives
    a valid lower bound, so the maximum is certified.
    """
    if budget <= 0:
        raise InputError("budget must be positive")
    f = as_function(space, f)
    supp = np.nonzero(f > 0)[0]
    if supp.size == 0:
        return 0.0
    pd, qd, rd = dual_exponent(p), dual_exponent(q), dual_exponent(r)
    w = space.omega_float

    def score(g):
        nrm = _norm(space, g, pd, qd, rd)
        return float(np.sum(f * g * w)) / nrm if nrm > 0 else 0.0

    best = 0.0
    if spec is not None:
        try:
            wit = build_dual(space, f, p, q, r, spec, K=K, single_iterated=q == r)
            best = max(best, score(wit.g))
        except (InputError, CropFailure):
            pass
    rng = random.Random(seed)
    for t in range(budget):
        g = np.zeros(space.n)
        kind = t % 3
        for i in supp:
            if kind == 0:
                g[i] = rng.random()
            elif kind == 1:
                g[i] = f[i] ** rng.uniform(0.0, 3.0)
            else:
                g[i] = float(rng.random() < 0.5) * f[i] ** (r - 1)
        if np.any(g):
            best = max(best, score(g))
    return best


def envelope_row(seed: int, n: int, p: float, q: float, r: float, rep: DualityReport) -> dict:
    return {
        "seed": seed,
        "n": n,
        "p": p,
        "q": q,
        "r": r,
        "c_lower": rep.c_lower,
        "C_upper": rep.C_upper,
        "ratio": rep.sharpness,
    }


__all__ = [
    "Block",
    "CropFailure",
    "DualWitness",
    "DualityReport",
    "SingleIteratedCase",
    "build_dual",
    "dual_exponent",
    "envelope_row",
    "pairing_sup_search",
    "replay_dual",
    "triangle_defect",
    "verify_duality",
]
