"""The xi-eta system built from the bosons ``c^{i,j}`` with ``nu_i nu_j = +1``.

``eta(z) = :exp(c(z)):`` and ``xi(z) = :exp(-c(z)):``.  Their zero modes
``eta_0`` (coefficient of ``z^{-1}``) and ``xi_0`` (coefficient of ``z^0``)
shift the ``c``-charge by ``+1`` and ``-1`` and preserve the
(sector, degree) blocks in the combinations ``eta_0 xi_0`` and ``xi_0 eta_0``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

from .heisenberg import Oscillators, basis_upto, enumerate_basis
from .relations import RelationReport, fmt
from .vertex import CurrentSpec, FieldTerm, ModeOp, VertexSpec, apply_chain

__all__ = [
    "BadPair",
    "XiEtaPair",
    "build_xi_eta",
    "check_current_commutation_up_to_sign",
    "check_projector",
    "commutation_sign",
    "check_xi_eta_decomposition",
    "exact_rank",
    "plus_pairs",
    "wakimoto_projector",
]


class BadPair(ValueError):
    pass


def plus_pairs(params):
    n = params.M + params.N
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if params.nu(i) * params.nu(j) == 1]


@dataclass
class XiEtaPair:
    pair: tuple
    eta: ModeOp
    xi: ModeOp

    def eta_xi(self):
        return [(1, [self.eta, self.xi])]

    def xi_eta(self):
        return [(1, [self.xi, self.eta])]


class KleinTwisted:
    """``A * (-1)^(sum of charges in ``support``)``, applied on the input side."""

    def __init__(self, op, support):
        self.op = op
        self.support = tuple(support)
        self.parity = op.parity
        self.label = op.label

    def __repr__(self):
        return repr(self.op)

    def transitions(self, charge):
        return self.op.transitions(charge)

    def apply_state(self, state, viable=None):
        res = self.op.apply_state(state, viable)
        n = sum(state[0][x] for x in self.support)
        if n.denominator != 1:
            raise ValueError("Klein factor needs integral charges")
        if n % 2:
            return {k: -v for k, v in res.items()}
        return res


def build_xi_eta(osc: Oscillators, i, j, klein: bool = True) -> XiEtaPair:
    p = osc.params
    if not (1 <= i < j <= p.M + p.N) or p.nu(i) * p.nu(j) != 1:
        raise BadPair(f"({i},{j}) is not a pair with nu_i nu_j = +1")
    c = osc.c(i, j)
    eta = CurrentSpec(f"eta{i}{j}", [(p.one(), 0, VertexSpec(osc, [FieldTerm("full", c, Fraction(1))], label=f"eta{i}{j}"))], 1)
    xi = CurrentSpec(f"xi{i}{j}", [(p.one(), 0, VertexSpec(osc, [FieldTerm("full", c, Fraction(-1))], label=f"xi{i}{j}"))], 1)
    e0, x0 = ModeOp(eta, -1, f"eta0_{i}{j}"), ModeOp(xi, 0, f"xi0_{i}{j}")
    if klein:
        # e^{b^{i,j}} is odd, so e^{c^{i,j}} must anticommute with it and with the odd zero modes
        support = sorted(osc.fermionic) + [osc.b(i, j)]
        e0, x0 = KleinTwisted(e0, support), KleinTwisted(x0, support)
    return XiEtaPair((i, j), e0, x0)


# -- exact linear algebra ----------------------------------------------------
def exact_rank(columns, rows=None) -> int:
    """Rank of the matrix whose columns are sparse vectors (dicts)."""
    vecs = [dict(v) for v in columns if v]
    rank = 0
    pivots: list = []
    for v in vecs:
        v = dict(v)
        for key, pv in pivots:
            c = v.get(key)
            if c:
                for k2, x in pv.items():
                    nv = v.get(k2, 0) - c * x
                    if nv == 0:
                        v.pop(k2, None)
                    else:
                        v[k2] = nv
        if v:
            key = min(v, key=repr)
            inv = 1 / v[key]
            pv = {k: x * inv for k, x in v.items()}
            # keep earlier pivots reduced against the new one
            for n, (k0, p0) in enumerate(pivots):
                c = p0.get(key)
                if c:
                    for k2, x in pv.items():
                        nv = p0.get(k2, 0) - c * x
                        if nv == 0:
                            p0.pop(k2, None)
                        else:
                            p0[k2] = nv
            pivots.append((key, pv))
            rank += 1
    return rank


def _apply(terms, st, cap=None):
    return apply_chain(terms, {st: 1}, cap)


def _block(osc, sector, d):
    return enumerate_basis(osc, sector, d)


def check_xi_eta_decomposition(osc: Oscillators, sector=None, D: int = 2) -> RelationReport:
    """Square-zero, completeness, idempotency and rank identities per pair and block."""
    t0 = time.perf_counter()
    p = osc.params
    sector = osc.vacuum_charge() if sector is None else sector
    rep = RelationReport("XiEta_decomposition", {**p.describe(), "D": D, "sector": [fmt(v) for v in sector]}, "ExactPass")
    if not osc.is_restricted(sector):
        rep.status = "Skipped"
        rep.reason = "sector is not restricted (p_b != -p_c on a + pair)"
        return rep
    ranks = {}
    checked = 0
    for i, j in plus_pairs(p):
        xe = build_xi_eta(osc, i, j)
        for d in range(D + 1):
            block = _block(osc, sector, d)
            ex_cols, xe_cols, eta_cols = [], [], []
            for st in block:
                a = _apply(xe.eta_xi(), st)
                b = _apply(xe.xi_eta(), st)
                tot = dict(a)
                for k, v in b.items():
                    tot[k] = tot.get(k, 0) + v
                tot = {k: v for k, v in tot.items() if v != 0}
                problems = []
                if tot != {st: 1}:
                    problems.append("eta0 xi0 + xi0 eta0 != id")
                if _apply([(1, [xe.eta, xe.eta])], st):
                    problems.append("eta0^2 != 0")
                if _apply([(1, [xe.xi, xe.xi])], st):
                    problems.append("xi0^2 != 0")
                # idempotency of eta0 xi0 on this vector
                a2 = apply_chain(xe.eta_xi(), a)
                if a2 != a:
                    problems.append("(eta0 xi0)^2 != eta0 xi0")
                checked += 1
                if problems:
                    rep.status = "Fail"
                    rep.witness = {"pair": f"{i},{j}", "degree": d, "in": osc.describe_state(st), "problem": problems}
                    rep.wall_time = time.perf_counter() - t0
                    return rep
                ex_cols.append(a)
                xe_cols.append(b)
                eta_cols.append(_apply([(1, [xe.eta])], st))
            r1, r2 = exact_rank(ex_cols), exact_rank(xe_cols)
            r_eta = exact_rank(eta_cols)
            ker = len(block) - r_eta
            ranks[f"{i},{j}|d={d}"] = {"dim": len(block), "rank_eta_xi": r1, "rank_xi_eta": r2, "dim_ker_eta": ker}
            if r1 + r2 != len(block) or ker != r1:
                rep.status = "Fail"
                rep.witness = {"pair": f"{i},{j}", "degree": d, "ranks": ranks[f"{i},{j}|d={d}"]}
                break
    rep.entries = checked
    rep.extra = {"ranks": ranks}
    rep.wall_time = time.perf_counter() - t0
    return rep


def _mode_ops(currents, name, W):
    kind, i, s = name
    if kind == "X":
        cur = currents.x(i, s)
        return [ModeOp(cur, -m - 1, f"X{'+-'[s < 0]}{i}[{m}]") for m in range(-W, W + 1)]
    cur = currents.psi(i, s)
    return [ModeOp(cur, -s * n, f"Psi{'+-'[s < 0]}{i}[{n}]") for n in range(0, W + 1)]


def check_current_commutation_up_to_sign(currents, pair, current, D: int = 2, W: int = 2, sector=None, klein: bool = True, ops=("eta0", "xi0")) -> RelationReport:
    """Find the sign ``eps`` with ``A * mode = eps * mode * A`` for ``A`` in {eta_0, xi_0}.

    ``current`` is ``("X", i, sign)`` or ``("Psi", i, sign)``.  Passes iff a
    single ``eps`` fits every entry and agrees with the parity prediction
    ``(-1)^p(current)``; the measured sign and the prediction are both recorded.
    """
    t0 = time.perf_counter()
    osc = currents.osc
    p = osc.params
    sector = osc.vacuum_charge() if sector is None else sector
    xe = build_xi_eta(osc, *pair, klein=klein)
    cur = currents.x(current[1], current[2]) if current[0] == "X" else currents.psi(current[1], current[2])
    predicted = -1 if cur.parity else 1
    name = f"{current[0]}{'+-'[current[2] < 0]}{current[1]}"
    rep = RelationReport(
        "XiEta_commutation",
        {**p.describe(), "pair": f"{pair[0]},{pair[1]}", "current": name, "ops": list(ops), "D": D, "W": W},
        "ExactPass",
    )
    basis = basis_upto(osc, sector, D)
    eps = {}
    checked = 0
    for label, A in (("eta0", xe.eta), ("xi0", xe.xi)):
        if label not in ops:
            continue
        for op in _mode_ops(currents, current, W):
            for st in basis:
                lhs = apply_chain([(1, [A, op])], {st: 1}, D)
                rhs = apply_chain([(1, [op, A])], {st: 1}, D)
                keys = set(lhs) | set(rhs)
                for k in sorted(keys, key=repr):
                    lv, rv = lhs.get(k, 0), rhs.get(k, 0)
                    checked += 1
                    if rv == 0 and lv == 0:
                        continue
                    if rv == 0 or lv == 0 or (lv != rv and lv != -rv):
                        rep.status = "Fail"
                        rep.witness = {"op": label, "mode": repr(op), "in": osc.describe_state(st), "out": osc.describe_state(k), "lhs": fmt(lv), "rhs": fmt(rv)}
                        rep.wall_time = time.perf_counter() - t0
                        return rep
                    e = 1 if lv == rv else -1
                    if eps.setdefault(label, e) != e:
                        rep.status = "Fail"
                        rep.witness = {"op": label, "mode": repr(op), "reason": "inconsistent sign", "in": osc.describe_state(st)}
                        rep.wall_time = time.perf_counter() - t0
                        return rep
    rep.entries = checked
    measured = {k: v for k, v in eps.items()}
    rep.extra = {"measured_sign": measured, "parity_prediction": predicted}
    if any(v != predicted for v in measured.values()):
        rep.status = "Fail"
        rep.reason = "consistent sign differs from the parity prediction"
        rep.witness = {"measured": measured, "predicted": predicted}
    rep.wall_time = time.perf_counter() - t0
    return rep


def commutation_sign(currents, pair, current, D=1, W=1, sector=None):
    """The measured sign alone (``None`` if the operators commute trivially)."""
    r = check_current_commutation_up_to_sign(currents, pair, current, D, W, sector)
    signs = set(r.extra.get("measured_sign", {}).values()) if r.extra else set()
    if r.status == "Fail" and "measured" not in (r.witness or {}):
        raise ValueError(f"no consistent sign: {r.witness}")
    return signs.pop() if len(signs) == 1 else None


def wakimoto_projector(osc: Oscillators, sector=None, D: int = 1):
    """``eta_0 xi_0`` with ``eta_0``, ``xi_0`` the ordered products over all + pairs.

    Returns the projector as a list of operator words (for :func:`apply_chain`)
    and its block matrices ``{d: {(out, in): value}}``.
    """
    p = osc.params
    sector = osc.vacuum_charge() if sector is None else sector
    pairs = [build_xi_eta(osc, i, j) for i, j in plus_pairs(p)]
    ops = [x.eta for x in pairs] + [x.xi for x in pairs]
    word = [(1, ops)]
    mats = {}
    for d in range(D + 1):
        m = {}
        for st in _block(osc, sector, d):
            for k, v in apply_chain(word, {st: 1}).items():
                m[(k, st)] = v
        mats[d] = m
    return word, mats


def check_projector(currents, sector=None, D: int = 1, W: int = 1, sample=None) -> RelationReport:
    """Idempotency, trace = rank, and ``P X P = X P`` for sampled current modes."""
    t0 = time.perf_counter()
    osc = currents.osc
    p = osc.params
    sector = osc.vacuum_charge() if sector is None else sector
    word, mats = wakimoto_projector(osc, sector, D)
    rep = RelationReport("Wakimoto_projector", {**p.describe(), "D": D, "W": W}, "ExactPass")
    traces = {}
    for d, m in mats.items():
        block = _block(osc, sector, d)
        cols = []
        for st in block:
            v = apply_chain(word, {st: 1})
            if apply_chain(word, v) != v:
                rep.status = "Fail"
                rep.witness = {"problem": "P^2 != P", "in": osc.describe_state(st)}
                return rep
            cols.append(v)
        tr = sum((m.get((st, st), 0) for st in block), 0)
        rk = exact_rank(cols)
        traces[d] = {"trace": fmt(tr) if tr else "0/1", "rank": rk, "dim": len(block)}
        if tr != rk:
            rep.status = "Fail"
            rep.witness = {"problem": "trace != rank", "degree": d, **traces[d]}
            return rep
    sample = sample or [("X", i, s) for i in range(1, p.rank + 1) for s in (1, -1)]
    basis = basis_upto(osc, sector, D)
    for name in sample:
        for op in _mode_ops(currents, name, W):
            for st in basis:
                xp = apply_chain([(1, [op] + word[0][1])], {st: 1}, D)
                pxp = apply_chain([(1, word[0][1] + [op] + word[0][1])], {st: 1}, D)
                if xp != pxp:
                    rep.status = "Fail"
                    rep.witness = {"problem": "P X P != X P", "mode": repr(op), "in": osc.describe_state(st)}
                    return rep
    rep.extra = {"blocks": traces}
    rep.wall_time = time.perf_counter() - t0
    return rep
