"""Command line entry point: ``python3 -m outerlp <command> ...``.

Exit codes: 0 when every checked property holds, 1 when some property
fails (the witness is part of the output), 2 on malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .conditions import canopy_check, crop_check, identity_spec, parent_function_check, spec_from_json
from .decompose import (
    VARIANTS,
    decomposition_json,
    exterior_decompose,
    interior_decompose,
    verify_exterior,
    verify_interior,
)
from .duality import CropFailure, build_dual, verify_duality
from .norms import Inner, NormEngine, Outer, outer_norm
from .settings import Setting, load_setting
from .space import DEFAULT_EXACT_LIMIT, FiniteSpace, InputError, random_space
from .suites import SUITES, SuiteConfig, counterexample_rows, run_suite

log = logging.getLogger("outerlp")


@dataclass
class ExperimentConfig:
    command: str
    setting: str | None = None
    function: str | None = None
    p: float | None = None
    q: float | None = None
    r: float | None = None
    psi: float | None = None
    seed: int = 0
    seeds: int = 100
    budget: int = 8
    exact_limit: int = DEFAULT_EXACT_LIMIT
    out: str | None = None
    fmt: str = "json"
    extra: dict = field(default_factory=dict)


# -- input ---------------------------------------------------------------------------------


def read_json(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_any_setting(cfg: ExperimentConfig) -> Setting:
    """A setting descriptor ``{"kind": ...}`` or a raw space description."""
    if cfg.setting is None:
        raise InputError("--setting is required")
    data = read_json(cfg.setting)
    if not isinstance(data, dict):
        raise InputError(f"{cfg.setting}: expected a JSON object")
    if data.get("kind") == "random":
        try:
            n = int(data["n"])
        except KeyError as exc:
            raise InputError("random setting needs n") from exc
        sp = random_space(n, int(data.get("seed", cfg.seed)))
        return Setting(sp, identity_spec(sp), Fraction(1), "random", {"n": n})
    if "kind" in data:
        return load_setting(data)
    sp = FiniteSpace.from_json(data, exact_limit=cfg.exact_limit)
    spec_path = cfg.extra.get("spec")
    spec = spec_from_json(sp, read_json(spec_path)) if spec_path else identity_spec(sp)
    return Setting(sp, spec, Fraction(str(cfg.extra.get("K", 1))), "file")


def load_function(cfg: ExperimentConfig, st: Setting) -> np.ndarray:
    """Values aligned with the points; a dyadic setting also takes ``{"m,l,n": v}`` maps.

    Without ``--function`` the indicator of the whole space is used.
    """
    n = st.space.n
    if cfg.function is None:
        return np.ones(n)
    data = read_json(cfg.function)
    if isinstance(data, dict) and "values" in data:
        data = data["values"]
    if isinstance(data, dict):
        if st.kind != "dyadic":
            raise InputError("tile maps need a dyadic setting")
        from .dyadic import as_array

        try:
            values = {tuple(int(x) for x in k.split(",")): float(v) for k, v in data.items()}
        except ValueError as exc:
            raise InputError(f"bad tile key: {exc}") from exc
        return np.array(as_array(st, values))
    if not isinstance(data, list) or len(data) != n:
        raise InputError(f"function must be a list of {n} values")
    try:
        arr = np.array([float(v) for v in data])
    except (TypeError, ValueError) as exc:
        raise InputError(f"function values must be numbers: {exc}") from exc
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InputError("function values must be finite and nonnegative")
    return arr


def need(cfg: ExperimentConfig, *names: str):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise InputError("missing " + ", ".join(f"--{m}" for m in missing))
    return [getattr(cfg, n) for n in names]


# -- output --------------------------------------------------------------------------------


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return _clean(x.item())
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def render(payload, rows: list[dict] | None, fmt: str) -> str:
    if fmt == "csv":
        rows = rows if rows is not None else [payload]
        buf = io.StringIO()
        keys: list[str] = []
        for row in rows:
            for k in row:
                if k not in keys:
                    keys.append(k)
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _csv_cell(v) for k, v in _clean(row).items()})
        return buf.getvalue()
    return json.dumps(_clean(payload), indent=2) + "\n"


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (dict, list)):
        return json.dumps(v)
    return v


def emit(cfg: ExperimentConfig, payload, rows=None):
    text = render(payload, rows, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands --------------------------------------------------------------------------------


def cmd_norm(cfg: ExperimentConfig) -> int:
    st = load_any_setting(cfg)
    f = load_function(cfg, st)
    p, r = need(cfg, "p", "r")
    size = Inner(r) if cfg.q is None else Outer(cfg.q, r)
    res = outer_norm(st.space, f, p, size, engine=NormEngine(st.space, f, cfg.exact_limit))
    payload = {"size": str(size), "p": p, **res.to_json()}
    emit(cfg, payload, [{"size": str(size), "p": p, "value": res.value}])
    return 0


def cmd_counterexample(cfg: ExperimentConfig) -> int:
    family = cfg.extra["family"]
    lo, hi = cfg.extra["m_range"]
    p = cfg.p if cfg.p is not None else 1.0
    q = cfg.q if cfg.q is not None else 1.0
    r = need(cfg, "r")[0]
    if family == "second" and not 0 < r <= 1:
        raise InputError("the second family needs 0 < r <= 1")
    rows = counterexample_rows(family, range(lo, hi + 1), p, q, r)
    ok = True
    for row in rows:
        for ref in ("single_ref", "double_ref"):
            val = row[ref.replace("_ref", "")]
            if row[ref] is not None and abs(val - row[ref]) > 1e-9 * max(1.0, abs(row[ref])):
                ok = False
        if row["bound"] is not None and row["double"] > row["bound"] * (1 + 1e-12):
            ok = False
    emit(cfg, {"family": family, "rows": rows, "references_match": ok}, rows)
    return 0 if ok else 1


def cmd_verify(cfg: ExperimentConfig) -> int:
    exps = None
    if cfg.p is not None or cfg.q is not None or cfg.r is not None:
        exps = [tuple(need(cfg, "p", "q", "r"))]
    sc = SuiteConfig(
        seeds=cfg.seeds, seed0=cfg.seed, budget=cfg.budget, exponents=exps, J=cfg.extra.get("J", 1), psi=cfg.psi
    )
    res = run_suite(cfg.extra["theorem"], sc)
    if cfg.fmt == "csv":
        emit(cfg, None, res.rows)
        sys.stderr.write(json.dumps(_clean(res.to_json())) + "\n")
    else:
        emit(cfg, {**res.to_json(), "rows": res.rows})
    return 0 if res.passed else 1


def cmd_conditions(cfg: ExperimentConfig) -> int:
    st = load_any_setting(cfg)
    K = Fraction(str(cfg.extra["K"])) if cfg.extra.get("K") is not None else st.K
    budget = cfg.budget if cfg.extra.get("budget_set") else 256
    verdicts = [
        parent_function_check(st.space, st.covering, seed=cfg.seed),
        canopy_check(st.space, st.covering, K, budget=budget, d_budget=32, seed=cfg.seed),
        crop_check(st.space, st.covering, K, budget=budget, seed=cfg.seed),
    ]
    out = [v.to_json() for v in verdicts]
    emit(cfg, {"K": str(K), "phi": str(st.phi), "verdicts": out}, out)
    return 0 if all(v.holds for v in verdicts) else 1


def cmd_decompose(cfg: ExperimentConfig) -> int:
    st = load_any_setting(cfg)
    f = load_function(cfg, st)
    variant = cfg.extra["variant"]
    eng = NormEngine(st.space, f, cfg.exact_limit)
    if variant == "interior":
        q, r = need(cfg, "q", "r")
        dec = interior_decompose(st.space, f, q, r, engine=eng)
        rep = verify_interior(eng, dec)
    else:
        p, q, r = need(cfg, "p", "q", "r")
        dec = exterior_decompose(st.space, f, p, q, r, st.covering, variant, K=st.K, psi=cfg.psi, engine=eng)
        rep = verify_exterior(eng, dec, st.covering)
    emit(cfg, decomposition_json(dec, rep), [c.to_row() for c in rep.checks])
    return 0 if rep.ok else 1


def cmd_dual(cfg: ExperimentConfig) -> int:
    st = load_any_setting(cfg)
    f = load_function(cfg, st)
    p, q, r = need(cfg, "p", "q", "r")
    try:
        wit = build_dual(st.space, f, p, q, r, st.covering, K=st.K, single_iterated=cfg.extra.get("single", False))
    except CropFailure as exc:
        emit(cfg, {"error": str(exc)})
        return 1
    rep = verify_duality(st.space, f, wit, spec=st.covering)
    emit(cfg, {"witness": wit.to_json(), "report": rep.to_json()}, [rep.to_json()])
    return 0 if rep.links_ok and rep.holds_within_envelope else 1


COMMANDS = {
    "norm": cmd_norm,
    "counterexample": cmd_counterexample,
    "verify": cmd_verify,
    "conditions": cmd_conditions,
    "decompose": cmd_decompose,
    "dual": cmd_dual,
}


# -- parsing --------------------------------------------------------------------------------


def exponent(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        v = float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not an exponent: {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError("exponents must be positive")
    return v


def m_range(text: str) -> tuple[int, int]:
    try:
        lo, _, hi = text.partition("-")
        lo_i, hi_i = int(lo), int(hi or lo)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected A-B, got {text!r}") from exc
    if not 1 <= lo_i <= hi_i:
        raise argparse.ArgumentTypeError("need 1 <= A <= B")
    return lo_i, hi_i


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--setting", help="setting descriptor or space description (JSON)")
    common.add_argument("--function", help="function values (JSON)")
    common.add_argument("--p", type=exponent)
    common.add_argument("--q", type=exponent)
    common.add_argument("--r", type=exponent)
    common.add_argument("--psi", type=float, help="level base for the psi variant")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None)
    common.add_argument("--exact-limit", type=int, default=DEFAULT_EXACT_LIMIT)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="outerlp", description="Exact iterated outer L^p norms on finite spaces.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("norm", parents=[common], help="single (no --q) or double iterated norm with its step profile")
    ce = sub.add_parser("counterexample", parents=[common], help="norm tables for the blow-up families")
    ce.add_argument("--family", choices=("first", "second"), required=True)
    ce.add_argument("--m-range", type=m_range, default=(1, 8))
    ver = sub.add_parser("verify", parents=[common], help="run a property suite over a seeded corpus")
    ver.add_argument("theorem", choices=SUITES)
    ver.add_argument("--seeds", type=int, default=100)
    ver.add_argument("--J", type=int, default=1)
    cond = sub.add_parser("conditions", parents=[common], help="parent, canopy and crop verdicts")
    cond.add_argument("--spec", help="covering function description (JSON)")
    cond.add_argument("--K", type=str, default=None)
    dec = sub.add_parser("decompose", parents=[common], help="interior or exterior decomposition with its checks")
    dec.add_argument("--variant", choices=("interior",) + VARIANTS, default="canopy")
    dec.add_argument("--spec")
    dual = sub.add_parser("dual", parents=[common], help="dual witness and the duality report")
    dual.add_argument("--spec")
    dual.add_argument("--single", action="store_true", help="allow q == r via the single iterated route")
    return ap


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    extra = {}
    for key in ("family", "m_range", "theorem", "J", "spec", "K", "variant", "single"):
        if hasattr(ns, key):
            extra[key] = getattr(ns, key)
    extra["budget_set"] = ns.budget is not None
    return ExperimentConfig(
        command=ns.command,
        setting=ns.setting,
        function=ns.function,
        p=ns.p,
        q=ns.q,
        r=ns.r,
        psi=ns.psi,
        seed=ns.seed,
        seeds=getattr(ns, "seeds", 100),
        budget=ns.budget if ns.budget is not None else 8,
        exact_limit=ns.exact_limit,
        out=ns.out,
        fmt=ns.format,
        extra=extra,
    )


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = config_from_args(ns)
    if cfg.budget <= 0:
        sys.stderr.write("outerlp: error: --budget must be positive\n")
        return 2
    if cfg.psi is not None and not cfg.psi > 1:
        sys.stderr.write("outerlp: error: --psi must exceed 1\n")
        return 2
    try:
        return COMMANDS[cfg.command](cfg)
    except InputError as exc:
        sys.stderr.write(f"outerlp: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
