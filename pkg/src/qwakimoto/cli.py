"""Batch driver: ``qwakimoto --M 2 --N 1 --suites relations,screening --out report.json``.

Exit status is 0 when every non-skipped check passes, 1 on any failure and
2 on a configuration error.  Config files (JSON, or TOML on Python >= 3.11)
use the flag names without dashes as keys; flags override the file.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from .relations import RELATION_IDS, Harness, RelationReport, check_highest_weight, check_relation, fmt
from .scalars import DeformationParams, NonRepresentableExponent

SUITES = ("relations", "highest_weight", "screening", "xi_eta", "classical", "limit", "gauge")
DEFAULT_RELATIONS = ["HH", "H_X", "XX_quadratic", "XX_commuting", "X_plus_minus_delta", "Serre_cubic", "Psi_consistency", "Serre_quartic"]
DEFAULTS = {
    "M": 2,
    "N": 1,
    "level": "1",
    "base_t": "1/2",
    "granularity": None,
    "degree": 2,
    "window": 2,
    "sector": "vacuum",
    "suites": ",".join(SUITES),
    "c_override": [],
    "out": "report.json",
    "jobs": 1,
    "seed": 0,
}


class ConfigError(ValueError):
    def __init__(self, field, msg):
        super().__init__(f"{field}: {msg}")
        self.field = field


# -- configuration -------------------------------------------------------------
def _frac(field, v):
    try:
        return Fraction(str(v))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(field, f"not a rational number: {v!r}") from exc


def _load_file(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError("config", f"no such file {path}")
    if p.suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # Python < 3.11
            import tomli as tomllib
        try:
            return tomllib.loads(p.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"bad TOML: {exc}") from exc
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", str(exc)) from exc


def parse_sector(spec: str, osc):
    """``vacuum``, ``hw:l1,l2,...`` or ``charges:b12=1,c12=-1,a1=1/2``."""
    spec = spec.strip()
    if spec == "vacuum":
        return osc.vacuum_charge(), None
    kind, _, body = spec.partition(":")
    if kind == "hw":
        l = [_frac("sector", x) for x in body.split(",") if x]
        if len(l) != osc.params.rank:
            raise ConfigError("sector", f"highest weight needs {osc.params.rank} entries")
        return osc.charge_from(p_a=l), l
    if kind == "charges":
        p_a, p_b, p_c = [Fraction(0)] * osc.params.rank, {}, {}
        for item in body.split(","):
            name, _, val = item.partition("=")
            name, v = name.strip(), _frac("sector", val)
            try:
                if name[0] == "a":
                    p_a[int(name[1:]) - 1] = v
                elif name[0] in "bc" and len(name) == 3:
                    (p_b if name[0] == "b" else p_c)[(int(name[1]), int(name[2]))] = v
                else:
                    raise ValueError
            except (ValueError, IndexError) as exc:
                raise ConfigError("sector", f"bad charge {item!r}") from exc
        try:
            return osc.charge_from(p_a=p_a, p_b=p_b, p_c=p_c), None
        except Exception as exc:
            raise ConfigError("sector", str(exc)) from exc
    raise ConfigError("sector", f"unknown sector {spec!r}")


def parse_overrides(items):
    out = {}
    for item in items or []:
        key, _, val = str(item).partition("=")
        try:
            i, j = (int(x) for x in key.split(","))
        except ValueError as exc:
            raise ConfigError("c_override", f"expected 'i,j=value', got {item!r}") from exc
        v = _frac("c_override", val)
        if v == 0:
            raise ConfigError("c_override", f"c_{{{i},{j}}} must be nonzero")
        out[(i, j)] = v
    return out


def build_config(argv=None):
    ap = argparse.ArgumentParser(prog="qwakimoto", description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--M", type=int)
    ap.add_argument("--N", type=int)
    ap.add_argument("--level")
    ap.add_argument("--base-t", dest="base_t")
    ap.add_argument("--granularity", type=int)
    ap.add_argument("--degree", type=int)
    ap.add_argument("--window", type=int)
    ap.add_argument("--sector")
    ap.add_argument("--suites", help=f"comma list of {', '.join(SUITES)} or relation ids")
    ap.add_argument("--c-override", dest="c_override", action="append", help="i,j=value (repeatable)")
    ap.add_argument("--out")
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--seed", type=int)
    ns = ap.parse_args(argv)
    cfg = dict(DEFAULTS)
    if ns.config:
        data = _load_file(ns.config)
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError("config", f"unknown keys {sorted(unknown)}")
        cfg.update(data)
    for key in DEFAULTS:
        v = getattr(ns, key)
        if v is not None:
            cfg[key] = v
    return validate(cfg)


def validate(cfg):
    cfg = dict(cfg)
    for key in ("M", "N", "degree", "window", "jobs"):
        if not isinstance(cfg[key], int) or cfg[key] < (0 if key in ("degree", "window") else 1):
            raise ConfigError(key, f"invalid value {cfg[key]!r}")
    if isinstance(cfg["suites"], str):
        cfg["suites"] = [s.strip() for s in cfg["suites"].split(",") if s.strip()]
    for s in cfg["suites"]:
        if s not in SUITES and s not in RELATION_IDS:
            raise ConfigError("suites", f"unknown suite {s!r}")
    if isinstance(cfg["c_override"], dict):
        cfg["c_override"] = [f"{k}={v}" for k, v in cfg["c_override"].items()]
    cfg["overrides"] = parse_overrides(cfg["c_override"])
    k, t = _frac("level", cfg["level"]), _frac("base_t", cfg["base_t"])
    try:
        cfg["params"] = DeformationParams(cfg["M"], cfg["N"], k, t, cfg["granularity"])
    except NonRepresentableExponent as exc:
        raise ConfigError("granularity", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from exc
    p = cfg["params"]
    rank = p.M + p.N - 1
    for i, j in cfg["overrides"]:
        if not 1 <= j <= i <= rank:
            raise ConfigError("c_override", f"index ({i},{j}) outside 1 <= j <= i <= {rank}")
    if p.k + p.g == 0 and "screening" in cfg["suites"]:
        raise ConfigError("level", "screening needs k != -g (critical level)")
    from .heisenberg import Oscillators

    cfg["sector_charge"], cfg["hw"] = parse_sector(cfg["sector"], Oscillators(p))
    return cfg


# -- suites --------------------------------------------------------------------
def _relations(cfg, ids, overrides=None):
    p = cfg["params"]
    h = Harness(p, cfg["degree"], cfg["window"], cfg["sector_charge"], overrides, jobs=cfg["jobs"])
    return [check_relation(rid, h) for rid in ids]


def _highest_weight(cfg):
    p = cfg["params"]
    l = cfg["hw"] or [0] * p.rank
    if p.k + p.g == 0:
        return [RelationReport("HighestWeight", p.describe(), "Skipped", reason="CriticalLevel")]
    return [check_highest_weight(l, p, cfg["degree"], cfg["window"])]


def _screening(cfg):
    from .currents import Currents
    from .heisenberg import Oscillators
    from .screening import commutator_profile, telescoping_test

    p = cfg["params"]
    C = Currents(Oscillators(p), cfg["overrides"])
    out = []
    gens = [("X", j, s) for j in range(1, p.rank + 1) for s in (1, -1)]
    gens += [("H", j, m) for j in range(1, p.rank + 1) for m in range(-cfg["window"], cfg["window"] + 1) if m]
    for i in range(1, p.rank + 1):
        for g in gens:
            prof = commutator_profile(i, g, C)
            rep = telescoping_test(prof, cfg["degree"], cfg["sector_charge"], C, p)
            rep.params = {**rep.params, "screening": i, "generator": "".join(str(x) for x in g)}
            out.append(rep)
    return out


def _xi_eta(cfg):
    from .currents import Currents
    from .heisenberg import Oscillators
    from .wakimoto import check_current_commutation_up_to_sign, check_projector, check_xi_eta_decomposition, plus_pairs

    p = cfg["params"]
    osc = Oscillators(p)
    C = Currents(osc, cfg["overrides"])
    sec, D, W = cfg["sector_charge"], cfg["degree"], cfg["window"]
    pairs = plus_pairs(p)
    if not pairs:
        return [RelationReport("XiEta_decomposition", p.describe(), "Skipped", reason="no pair with nu_i nu_j = +1")]
    out = [check_xi_eta_decomposition(osc, sec, D)]
    if out[0].status == "Skipped":
        return out
    for pair in pairs:
        for kind in ("X", "Psi"):
            for i in range(1, p.rank + 1):
                for s in (1, -1):
                    for op in ("eta0", "xi0"):
                        out.append(check_current_commutation_up_to_sign(C, pair, (kind, i, s), D, W, sec, ops=(op,)))
    out.append(check_projector(C, sec, min(D, 2), min(W, 1)))
    return out


def _classical(cfg):
    from .classical import (
        ClassicalFock,
        check_classical_affine_relations,
        check_classical_ope,
        check_classical_screening,
        kappa_table,
        read_kappa,
    )

    p = cfg["params"]
    f = ClassicalFock(p.M, p.N, p.k)
    D, W = cfg["degree"], cfg["window"]
    out = [check_classical_ope(f, D, W), check_classical_affine_relations(f, D, W)]
    t0 = time.perf_counter()
    table = kappa_table(p.M, p.N, p.k)
    read = {i: read_kappa(f, i) for i in table}
    ok = all(read[i] == table[i] for i in table)
    out.append(RelationReport(
        "Classical_kappa",
        {"M": p.M, "N": p.N, "k": fmt(p.k)},
        "ExactPass" if ok else "Fail",
        witness=None if ok else {str(i): [None if read[i] is None else fmt(read[i]), fmt(table[i])] for i in table},
        extra={"kappa": {str(i): fmt(v) for i, v in table.items()}},
        wall_time=time.perf_counter() - t0,
    ))
    if p.k + p.g != 0:
        out.append(check_classical_screening(f, min(D, 1), min(W, 1)))
    return out


def _limit(cfg):
    from .classical import auto_selectors, limit_compare

    p = cfg["params"]
    t0 = time.perf_counter()
    rows = limit_compare(auto_selectors(p.M, p.N, p.k, D=1), p.M, p.N, p.k)
    bad = [r for r in rows if not r["passed"]]
    rel = max((r["rel_error"] for r in rows), default=0.0)
    return [RelationReport(
        "Limit",
        {"M": p.M, "N": p.N, "k": fmt(p.k), "q": "1-2^-j, j=3..8", "rtol": 1e-3},
        "ExactPass" if not bad else "Fail",
        witness={"selector": bad[0]["selector"], "classical": bad[0]["classical"], "extrapolated": bad[0]["extrapolated"]} if bad else None,
        entries=len(rows),
        extra={"max_rel_error": float(f"{rel:.3e}")},
        wall_time=time.perf_counter() - t0,
    )]


def random_overrides(params, seed):
    """Seeded nonzero rational c_{i,j} for every admissible (i, j)."""
    rng = random.Random(seed)
    out = {}
    for i in range(1, params.rank + 1):
        for j in range(1, i + 1):
            out[(i, j)] = Fraction(rng.choice((-1, 1)) * rng.randint(1, 7), rng.randint(1, 5))
    return out


def _gauge(cfg, ids):
    p = cfg["params"]
    ov = random_overrides(p, cfg["seed"])
    base = _relations(cfg, ids)
    again = _relations(cfg, ids, ov)
    same = [a.status == b.status for a, b in zip(base, again)]
    for r in again:
        r.id = f"Gauge:{r.id}"
        r.params = {**r.params, "c_overrides": {f"{i},{j}": fmt(v) for (i, j), v in sorted(ov.items())}}
    status = "ExactPass" if all(same) and all(r.status != "Fail" for r in again) else "Fail"
    summary = RelationReport(
        "Gauge",
        {**p.describe(), "seed": cfg["seed"]},
        status,
        witness=None if status == "ExactPass" else {"changed": [a.id for a, s in zip(base, same) if not s]},
    )
    return again + [summary]


def run_suite(cfg):
    """Run the selected suites; returns the list of reports (partial on interrupt)."""
    ids = [s for s in cfg["suites"] if s in RELATION_IDS]
    todo = [s for s in cfg["suites"] if s in SUITES]
    if "relations" in todo:
        ids = ids or DEFAULT_RELATIONS
    results = []
    interrupted = False
    try:
        if ids and ("relations" in todo or not todo or set(cfg["suites"]) & set(RELATION_IDS)):
            results += _relations(cfg, ids)
        for s in todo:
            if s == "highest_weight":
                results += _highest_weight(cfg)
            elif s == "screening":
                results += _screening(cfg)
            elif s == "xi_eta":
                results += _xi_eta(cfg)
            elif s == "classical":
                results += _classical(cfg)
            elif s == "limit":
                results += _limit(cfg)
            elif s == "gauge":
                results += _gauge(cfg, ids or DEFAULT_RELATIONS)
    except KeyboardInterrupt:
        interrupted = True
    return results, interrupted


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction) or (hasattr(x, "numerator") and not isinstance(x, (int, float, bool))):
        return fmt(x)
    return x


def emit_report(results, path=None, config=None, interrupted=False) -> dict:
    counts = {"ExactPass": 0, "Fail": 0, "Skipped": 0}
    for r in results:
        counts[r.status] = counts.get(r.status, 0) + 1
    doc = {
        "config": _jsonable(config or {}),
        "records": [_jsonable(r.as_dict()) for r in results],
        "summary": {"total": len(results), **counts, "interrupted": interrupted},
    }
    if path:
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def main(argv=None) -> int:
    try:
        cfg = build_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    results, interrupted = run_suite(cfg)
    shown = {k: cfg[k] for k in DEFAULTS}
    shown["suites"] = cfg["suites"]
    doc = emit_report(results, cfg["out"], shown, interrupted)
    for r in results:
        print(f"{r.status:10s} {r.id} {json.dumps(_jsonable(r.params), sort_keys=True)}")
    s = doc["summary"]
    print(f"{s['ExactPass']} passed, {s['Fail']} failed, {s['Skipped']} skipped -> {cfg['out']}")
    if interrupted:
        return 1
    return 1 if s["Fail"] else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
