"""Commutators of the algebra with the screening currents, and the Jackson test.

For a constituent pair ``V(z)`` of a generator current and ``U(w)`` of ``S_i``,
the operator products are ``V(z)U(w) = R_12(z, w) :VU:`` and
``U(w)V(z) = R_21(z, w) :VU:`` with rational ``R``.  When the two agree
(locality) and have simple poles, the graded commutator is

    [V(z), U(w)] = sum_r A_r delta(q^{a_r} w / z) K_r(w).

The screening charge is a Jackson integral in ``w`` with base ``p = q^P``,
``P = 2(k + g)``.  Integrating the sum over ``w = s p^n`` merges the terms whose
localization exponents ``a_r`` agree modulo ``P``.  For generic ``s`` the
commutator vanishes iff, for each class,

    sum_r A_r p^{-l_r} K_r(q^{-a_r} z) = 0,    a_r = a_class + P l_r,

which is verified exactly on every matrix element of the truncated block.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .currents import Currents
from .heisenberg import Oscillators, basis_upto, degree
from .relations import RelationReport, fmt
from .scalars import CriticalLevel
from .vertex import CurrentSpec, ModeOp, VertexSpec, apply_chain

__all__ = [
    "CommutatorProfile",
    "LocalityFailure",
    "ProfileTerm",
    "UnalignedExponents",
    "commutator_profile",
    "contraction",
    "jackson_sum_numeric",
    "telescoping_test",
]


class LocalityFailure(ValueError):
    """The two orderings of a constituent pair are not the same rational function."""


class UnalignedExponents(ValueError):
    pass


# -- Laurent polynomials in U = q^{m/e} ---------------------------------------
def _lmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for i, x in a.items():
        for j, y in b.items():
            out[i + j] = out.get(i + j, 0) + x * y
    return {k: v for k, v in out.items() if v != 0}


def _ladd(a: dict, b: dict, c=1) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + c * v
    return {k: v for k, v in out.items() if v != 0}


def _ldiv(num: dict, den: dict) -> dict:
    """Exact Laurent division; raises if there is a remainder."""
    if not num:
        return {}
    num = dict(num)
    dtop = max(den)
    lead = den[dtop]
    quo: dict = {}
    dlow = min(den)
    while num:
        top = max(num)
        if top - dtop < min(num) - dlow:
            raise ValueError("inexact Laurent division")
        c = num[top] / lead
        k = top - dtop
        quo[k] = c
        for e, v in den.items():
            nv = num.get(e + k, 0) - c * v
            if nv == 0:
                num.pop(e + k, None)
            else:
                num[e + k] = nv
    return quo


def _bracket_poly(x: Fraction, e: int) -> dict:
    """``(q - q^-1)[x m]`` as a Laurent polynomial in ``U``."""
    n = x * e
    if n.denominator != 1:
        raise ValueError(f"[{x} m] is off the lattice")
    n = int(n)
    return {n: 1, -n: -1} if n else {}


# -- symbolic mode coefficients -----------------------------------------------
def _sym_alpha(t, sigma: int, e: int, params):
    """``alpha(x, sigma m)`` for ``m > 0``: (const, U-exponent, {bracket: power})."""
    q = params.q
    coef = params.scalar(t.coef)
    if t.kind == "pm":
        if sigma != t.sigma:
            return None
        return (coef * sigma * (q - 1 / q), int(-t.shift * sigma * e), {Fraction(1): 0})
    br = {Fraction(1): -1}
    const = -coef * sigma
    expo = -t.shift * sigma
    if t.kind == "ratio":
        for l in t.L:
            br[abs(l)] = br.get(abs(l), 0) + 1
            const *= sigma * (1 if l > 0 else -1)
        for mm in t.Mlist:
            br[abs(mm)] = br.get(abs(mm), 0) - 1
            const *= sigma * (1 if mm > 0 else -1)
        expo -= t.alpha
    expo = expo * e
    if expo.denominator != 1:
        raise ValueError("shift off the lattice")
    return (const, int(expo), br)


def _sym_metric(osc: Oscillators, x: int, y: int):
    """``m [x_m, y_-m]`` for ``m > 0`` as (const, {bracket: power})."""
    p = osc.params
    ox, oy = osc.osc[x], osc.osc[y]
    if ox.family == oy.family == "a":
        A = p.A(ox.i, oy.i)
        if not A:
            return None
        kg = p.k + p.g
        br = {abs(Fraction(kg)): 1}
        br[Fraction(abs(A))] = br.get(Fraction(abs(A)), 0) + 1
        sign = (1 if A > 0 else -1) * (1 if kg > 0 else -1)
        return (p.scalar(sign), br)
    if ox == oy:
        s = osc.pair_sign(ox.i, ox.j)
        return (p.scalar(-s if ox.family == "b" else s), {Fraction(1): 2})
    return None


def contraction(V1: VertexSpec, V2: VertexSpec, sigma: int = 1) -> dict:
    """Exponents ``{a: kappa_a}`` with ``m C(m) = sum_a kappa_a q^{a m}``.

    ``C(m) = sum_{x,y} alpha_1(x, sigma m) alpha_2(y, -sigma m) [x_{sigma m}, y_{-sigma m}]``
    is the coefficient of ``(w/z)^m`` (``sigma = 1``) in ``log`` of the
    contraction of ``V1(z) V2(w)``.
    """
    osc = V1.osc
    p = V1.params
    e = p.e
    q = p.q
    groups: dict = {}
    for t1 in V1.terms:
        a1 = _sym_alpha(t1, sigma, e, p)
        if a1 is None:
            continue
        for t2 in V2.terms:
            g = _sym_metric(osc, t1.osc, t2.osc)
            if g is None:
                continue
            a2 = _sym_alpha(t2, -sigma, e, p)
            if a2 is None:
                continue
            # [x_{-m}, y_m] = -[y_m, x_-m] flips sign when sigma = -1; metric is symmetric
            const = a1[0] * a2[0] * g[0] * (1 if sigma > 0 else -1)
            br: dict = {}
            for d in (a1[2], a2[2], g[1]):
                for k, v in d.items():
                    br[k] = br.get(k, 0) + v
            key = tuple(sorted((k, v) for k, v in br.items() if v))
            poly = groups.setdefault(key, {})
            ex = a1[1] + a2[1]
            poly[ex] = poly.get(ex, 0) + const
    if not groups:
        return {}
    # common denominator over negative bracket powers
    dmax: dict = {}
    for key in groups:
        for k, v in key:
            if v < 0:
                dmax[k] = max(dmax.get(k, 0), -v)
    qq = q - 1 / q
    total: dict = {}
    for key, poly in groups.items():
        num = {k: v for k, v in poly.items() if v != 0}
        scale = p.one()
        pw = dict(key)
        for k, v in pw.items():
            if v > 0:
                for _ in range(v):
                    num = _lmul(num, _bracket_poly(k, e))
                scale /= qq**v
            else:
                scale *= qq ** (-v)
        for k, d in dmax.items():
            for _ in range(d + min(pw.get(k, 0), 0)):
                num = _lmul(num, _bracket_poly(k, e))
        total = _ladd(total, num, scale)
    den = {0: p.one()}
    for k, d in dmax.items():
        for _ in range(d):
            den = _lmul(den, _bracket_poly(k, e))
    res = _ldiv(total, den)
    return {Fraction(n, e): v for n, v in res.items() if v != 0}


# -- pair commutators -----------------------------------------------------------
@dataclass
class PairData:
    G: Fraction
    c12: object
    c21: object
    kappa12: dict
    kappa21: dict
    eps12: int


def _pair_data(V1: VertexSpec, V2: VertexSpec, parity_sign: int) -> PairData:
    osc = V1.osc
    p = V1.params
    G = Fraction(0)
    for x, l1 in V1.lam.items():
        for y, l2 in V2.lam.items():
            G += l1 * l2 * osc.zero_metric(x, y)
    merged = VertexSpec(osc, list(V1.terms) + list(V2.terms))
    ws_m = merged.written_sign
    eps12 = V1.written_sign * V2.written_sign * osc.reorder_sign(V1.lam, V2.lam) * ws_m
    eps21 = V2.written_sign * V1.written_sign * osc.reorder_sign(V2.lam, V1.lam) * ws_m
    sh2 = osc.shift_charge(osc.vacuum_charge(), V2.lam)
    sh1 = osc.shift_charge(osc.vacuum_charge(), V1.lam)
    nu12 = sum((v * sh2[x] for x, v in V1.nu.items()), Fraction(0))
    nu21 = sum((v * sh1[x] for x, v in V2.nu.items()), Fraction(0))
    c12 = eps12 * p.qpow(nu12)
    c21 = parity_sign * eps21 * p.qpow(nu21)
    return PairData(G, c12, c21, contraction(V1, V2, 1), contraction(V2, V1, 1), eps12)


def _as_int(x, what):
    x = Fraction(int(x.numerator), int(x.denominator)) if hasattr(x, "numerator") else Fraction(x)
    if x.denominator != 1:
        raise LocalityFailure(f"non-integral {what} {x}")
    return int(x)


def pair_residues(V1: VertexSpec, V2: VertexSpec, parity_sign: int = 1):
    """``[(a_r, A_r)]`` with ``[V1(z), V2(w)]_pm = z^G sum_r A_r delta(q^{a_r} w/z) :V1(z)V2(w):``.

    Also returns ``G``.  Verifies locality exactly.
    """
    p = V1.params
    d = _pair_data(V1, V2, parity_sign)
    k12 = {a: _as_int(v, "contraction exponent") for a, v in d.kappa12.items()}
    k21 = {a: _as_int(v, "contraction exponent") for a, v in d.kappa21.items()}
    # R21 = c21 z^G u^G prod_b (1 - q^b/u)^{-k_b}
    #     = c21 z^G u^{G + sum k_b} prod_b (-q^b)^{-k_b} (1 - q^{-b} u)^{-k_b}
    expected = {-b: v for b, v in k21.items() if v}
    if {a: v for a, v in k12.items() if v} != expected:
        raise LocalityFailure(f"contraction exponents differ: {k12} vs {k21}")
    if d.G + sum(k21.values()) != 0:
        raise LocalityFailure("z-powers of the two orderings differ")
    c21 = d.c21
    for b, v in k21.items():
        c21 = c21 * (-p.qpow(b)) ** (-v)
    if c21 != d.c12:
        raise LocalityFailure(f"orderings differ by a scalar ({d.c12} vs {c21})")
    out = []
    for a, v in k12.items():
        if v <= 0:
            continue
        if v > 1:
            raise LocalityFailure(f"pole of order {v} at u = q^{-a}")
        A = d.c12
        for b, w in k12.items():
            if b != a:
                A = A * (1 - p.qpow(b - a)) ** (-w)
        out.append((a, A))
    return d.G, out


# -- profiles ----------------------------------------------------------------
@dataclass
class ProfileTerm:
    a: Fraction  # localization exponent: the term sits on delta(q^a w / z)
    coef: object
    zshift: Fraction
    spec: VertexSpec
    label: str = ""

    def at_common_point(self, P):
        """``coef p^{-l} K(q^{-a} z)`` as a (weight, zshift, spec) current term."""
        return None


@dataclass
class CommutatorProfile:
    generator: str
    screening: int
    P: Fraction
    terms: list = field(default_factory=list)
    regular: list = field(default_factory=list)  # non-localized terms (must cancel outright)
    params: dict = field(default_factory=dict)

    def classes(self) -> dict:
        out: dict = {}
        for t in self.terms:
            out.setdefault(t.a % self.P, []).append(t)
        return out

    def is_empty(self) -> bool:
        return not self.terms and not self.regular

    def mutated(self, index: int) -> "CommutatorProfile":
        """Copy with one coefficient negated (for mutation tests)."""
        terms = list(self.terms)
        terms[index] = replace(terms[index], coef=-terms[index].coef)
        return replace(self, terms=terms)


def class_current(profile: CommutatorProfile, members) -> CurrentSpec:
    """``sum_r A_r p^{-l_r} K_r(q^{-a_r} z)`` for one exponent class."""
    P = profile.P
    base = min(t.a for t in members)
    terms = []
    for t in members:
        l = (t.a - base) / P
        if l.denominator != 1:
            raise UnalignedExponents(f"{t.a} and {base} differ by {t.a - base}")
        p = t.spec.params
        cur = CurrentSpec(t.label, [(t.coef * p.qpow(-P * l), t.zshift, t.spec)])
        terms.extend(cur.shifted(-t.a).terms)
    return CurrentSpec(f"class{base % P}", terms)


def _generator_current(currents: Currents, generator):
    kind = generator[0]
    if kind == "X":
        _, j, s = generator
        return currents.x(j, s)
    if kind == "Psi":
        _, j, s = generator
        return currents.psi(j, s)
    raise ValueError(f"unknown generator {generator}")


def commutator_profile(i, generator, currents: Currents) -> CommutatorProfile:
    """Exact localized form of ``[G, S_i(w)]`` for a generator current or H-mode.

    ``generator`` is ``("X", j, sign)``, ``("Psi", j, sign)``, ``("H", j, m)``
    (``m = 0`` for the Cartan zero mode).
    """
    p = currents.params
    if p.k + p.g == 0:
        raise CriticalLevel("k = -g")
    S = currents.screening(i)
    P = Fraction(2) * (p.k + p.g)
    name = "".join(str(g) for g in generator)
    prof = CommutatorProfile(name, i, P, params=p.describe())
    if generator[0] == "H":
        _, j, m = generator
        osc = currents.osc
        if m == 0:
            h = currents.h_zero(j)
            for wt, s, U in S.terms:
                sh = osc.shift_charge(osc.vacuum_charge(), U.lam)
                v = sum((c * sh[x] for x, c in h.coeffs.items()), Fraction(0))
                if v:
                    prof.regular.append((wt * p.scalar(v), s, U))
            return prof
        H = currents.h_mode(j, m)
        for wt, s, U in S.terms:
            val = p.zero()
            for x, hx in H.coeffs.items():
                for y in U.oscillators():
                    a = U.alpha(y, -m)
                    if a != 0:
                        val += hx * a * osc.metric(x, y, m)
            if val != 0:
                prof.regular.append((wt * val, s + m, U))
        return prof
    X = _generator_current(currents, generator)
    par = -1 if X.parity * S.parity else 1
    for wc, sc, V in X.terms:
        for wd, sd, U in S.terms:
            G, res = pair_residues(V, U, par)
            for a, A in res:
                merged = VertexSpec(V.osc, list(V.shifted(a).terms) + list(U.terms), label=f"{V.label}*{U.label}")
                coef = wc * wd * A * p.qpow(a * (sc + G))
                prof.terms.append(ProfileTerm(a, coef, sc + G + sd, merged, f"{V.label}|{U.label}@{a}"))
    return prof


def _exponents(cur: CurrentSpec, state, D: int):
    """All z-exponents of ``cur`` with nonzero block entries from ``state``."""
    d = degree(state[1])
    out = set()
    for _, s, spec in cur.terms:
        g = spec.z_offset(state[0]) + s
        for n in range(-d, D + 1):
            out.add(g + n)
    return sorted(out)


def profile_entries(profile: CommutatorProfile, basis, D: int):
    """``{(in, out, E): [(a_r, value)]}`` for every class member and block entry."""
    entries: dict = {}
    for t in profile.terms:
        cur = CurrentSpec(t.label, [(t.coef, t.zshift, t.spec)]).shifted(-t.a)
        for st in basis:
            for E in _exponents(cur, st, D):
                out = apply_chain([(1, [ModeOp(cur, E)])], {st: 1}, D)
                for key, v in out.items():
                    entries.setdefault((st, key, E), []).append((t.a, v))
    return entries


def telescoping_test(profile: CommutatorProfile, D: int = 1, sector=None, currents: Currents = None, params=None):
    """Exact class-by-class cancellation on the truncated block of degree ``<= D``."""
    t0 = time.perf_counter()
    p = params or (profile.terms[0].spec.params if profile.terms else (currents.params if currents else None))
    rep = RelationReport("Screening", {**(profile.params or {}), "generator": profile.generator, "i": profile.screening, "D": D}, "ExactPass")
    if profile.is_empty():
        rep.reason = "empty profile"
        rep.wall_time = time.perf_counter() - t0
        return rep
    osc = (profile.terms[0].spec.osc if profile.terms else profile.regular[0][2].osc)
    sector = osc.vacuum_charge() if sector is None else sector
    basis = basis_upto(osc, sector, D)
    rep.basis_size = len(basis)
    P = profile.P
    groups = list(profile.classes().items())
    if profile.regular:
        groups.append(("regular", None))
    checked = 0
    for key, members in groups:
        if key == "regular":
            cur = CurrentSpec("regular", list(profile.regular))
            base = None
        else:
            cur = class_current(profile, members)
            base = min(t.a for t in members)
        for st in basis:
            for E in _exponents(cur, st, D):
                out = apply_chain([(1, [ModeOp(cur, E)])], {st: 1}, D)
                checked += 1
                if out:
                    k, v = sorted(out.items(), key=lambda kv: repr(kv[0]))[0]
                    rep.status = "Fail"
                    rep.witness = {
                        "class": "regular" if base is None else fmt(base % P),
                        "members": [] if base is None else [t.label for t in members],
                        "in": osc.describe_state(st),
                        "out": osc.describe_state(k),
                        "z_exponent": str(E),
                        "residual": fmt(v),
                    }
                    rep.entries = checked
                    rep.wall_time = time.perf_counter() - t0
                    return rep
    rep.entries = checked
    rep.cells = len(groups)
    rep.extra = {"classes": {fmt(k % P) if k != "regular" else k: len(m or profile.regular) for k, m in groups}}
    rep.wall_time = time.perf_counter() - t0
    return rep


def jackson_sum_numeric(i, s, generator_mode, currents: Currents, windows=(2, 4, 6), D: int = 1, sector=None):
    """Partial bilateral Jackson sums of ``<out|[X_m, S_i(w)]|in>`` (floating diagnostic).

    ``generator_mode = ("X", j, sign, m)``.  For each window ``W`` reports
    ``max |s(1-p) sum_{|n|<=W} f(s p^n) p^n|`` over block entries, and whether
    the sequence decreases.
    """
    p = currents.params
    osc = currents.osc
    _, j, sg, m = generator_mode
    X = currents.x(j, sg)
    S = currents.screening(i)
    sector = osc.vacuum_charge() if sector is None else sector
    basis = basis_upto(osc, sector, D)
    Xm = ModeOp(X, -Fraction(m) - 1)
    sign = -1 if X.parity * S.parity else 1
    # matrix elements as Laurent polynomials in w
    poly: dict = {}
    for st in basis:
        Es = set()
        for cur_terms in (S.terms,):
            for _, sd, U in cur_terms:
                g = U.z_offset(st[0]) + sd
                for n in range(-degree(st[1]) - abs(m) - 2, D + abs(m) + 3):
                    Es.add(g + n)
        for E in sorted(Es):
            SE = ModeOp(S, E)
            out = apply_chain([(1, [Xm, SE]), (-sign, [SE, Xm])], {st: 1}, D)
            for key, v in out.items():
                poly.setdefault((st, key), {})
                poly[(st, key)][E] = poly[(st, key)].get(E, 0) + float(v)
    pf = float(p.qpow(2 * (p.k + p.g)))
    rows = []
    for W in windows:
        worst = 0.0
        for f in poly.values():
            tot = 0.0
            for n in range(-W, W + 1):
                w = s * pf**n
                tot += sum(c * w**float(E) for E, c in f.items()) * pf**n
            worst = max(worst, abs(s * (1 - pf) * tot))
        rows.append((W, worst))
    vals = [r[1] for r in rows]
    decaying = all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    return {
        "generator": f"X{'+' if sg > 0 else '-'}{j}[{m}]",
        "i": i,
        "s": s,
        "entries": len(poly),
        "partial_sums": [{"W": W, "max_abs": v} for W, v in rows],
        "decaying": decaying and not any(math.isinf(v) or math.isnan(v) for v in vals),
        "empty": not poly,
    }
