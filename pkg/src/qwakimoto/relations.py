"""Exact verification of the defining relations on truncated Fock sectors.

Every generating-function identity is translated into identities between mode
operators, and both sides are applied to every basis state of degree at most
``D`` in the chosen sector.  Outputs are compared entrywise (degree ``<= D``)
in exact arithmetic.  Operator words are represented as lists of
``(coefficient, [op_1, ..., op_r])`` read left to right.
"""

from __future__ import annotations

import itertools
import multiprocessing as mp
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .currents import Currents
from .heisenberg import Charge, Oscillators, basis_upto, degree
from .scalars import CriticalLevel, SingularCartan
from .vertex import CosetMismatch, ModeOp, ScalarOp, apply_chain, sector_z_offset

__all__ = [
    "RELATION_IDS",
    "Harness",
    "InvalidId",
    "RelationReport",
    "check_highest_weight",
    "check_relation",
]

RELATION_IDS = (
    "HH",
    "H_X",
    "XX_quadratic",
    "XX_commuting",
    "X_plus_minus_delta",
    "Serre_cubic",
    "Serre_quartic",
    "Psi_consistency",
    "HighestWeight",
)


class InvalidId(ValueError):
    pass


def fmt(x) -> str:
    """Exact scalar as ``"num/den"``."""
    x = Fraction(int(x.numerator), int(x.denominator)) if hasattr(x, "numerator") else Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass
class RelationReport:
    id: str
    params: dict
    status: str  # ExactPass | Fail | Skipped
    witness: dict | None = None
    reason: str = ""
    basis_size: int = 0
    entries: int = 0
    cells: int = 0
    offsets: dict = field(default_factory=dict)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "ExactPass"

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "params": self.params,
            "status": self.status,
            "witness": self.witness,
            "reason": self.reason,
            "basis_size": self.basis_size,
            "entries": self.entries,
            "cells": self.cells,
            "offsets": self.offsets,
            "extra": self.extra,
            "wall_time": round(self.wall_time, 3),
        }


# -- operator-word algebra --------------------------------------------------
class Word:
    """A homogeneous linear combination of operator products."""

    def __init__(self, terms, parity=0):
        self.terms = [(c, list(ops)) for c, ops in terms if c != 0]
        self.parity = parity % 2

    @classmethod
    def op(cls, op):
        return cls([(1, [op])], op.parity)

    def __mul__(self, other):
        return Word(
            [(c1 * c2, o1 + o2) for c1, o1 in self.terms for c2, o2 in other.terms],
            self.parity + other.parity,
        )

    def __add__(self, other):
        return Word(self.terms + other.terms, self.parity)

    def scale(self, a):
        return Word([(a * c, o) for c, o in self.terms], self.parity)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)


def bracket(x: Word, y: Word, a=1) -> Word:
    """``[x, y]_a = x y - (-1)^{p(x) p(y)} a y x``."""
    sign = -1 if x.parity * y.parity % 2 else 1
    return x * y - (y * x).scale(sign * a)


class QPowZero:
    """``q^{s * h}`` for a zero-mode operator ``h``: diagonal on sectors."""

    parity = 0

    def __init__(self, zero_op, s=1):
        self.zero_op = zero_op
        self.s = s
        self.label = f"q^({s}{zero_op.label})"

    def __repr__(self):
        return self.label

    def transitions(self, charge):
        return [(charge, 0)]

    def apply_state(self, state, viable=None):
        if viable is not None and not viable(state[0], degree(state[1])):
            return {}
        p = self.zero_op.osc.params
        return {state: p.qpow(self.s * self.zero_op.eigenvalue(state[0]))}


# -- harness ----------------------------------------------------------------
class Harness:
    """Currents, sector basis and caps for a batch of relation checks."""

    def __init__(self, params, D=2, W=2, sector=None, c_overrides=None, reverse_cocycle=False, jobs=1):
        self.params = params
        self.D, self.W = D, W
        self.osc = Oscillators(params, reverse_cocycle=reverse_cocycle)
        self.currents = Currents(self.osc, c_overrides)
        self.sector = self.osc.vacuum_charge() if sector is None else self.osc.intern(Fraction(v) for v in sector)
        self.basis = basis_upto(self.osc, self.sector, D)
        self.jobs = jobs
        self.reverse_cocycle = reverse_cocycle
        self.c_overrides = c_overrides

    # mode operators
    def X(self, i, s, r):
        """``X^{s,i}_r``: coefficient of ``z^{-r-1}``."""
        return Word.op(ModeOp(self.currents.x(i, s), -Fraction(r) - 1, f"X{'+-'[s < 0]}{i}[{r}]"))

    def H(self, i, m):
        if m == 0:
            return Word.op(self.currents.h_zero(i))
        return Word.op(self.currents.h_mode(i, m))

    def Psi(self, i, s, n):
        """Coefficient of ``z^{-n}`` in ``Psi_s^i(q^{s k/2} z)``."""
        return Word.op(ModeOp(self.currents.psi(i, s), -n, f"Psi{'+-'[s < 0]}{i}[{n}]"))

    def scalar(self, v):
        return Word([(1, [ScalarOp(v)])])

    def x_modes(self, i, s):
        """Mode indices of ``X^{s,i}`` in the window around the sector's coset."""
        off = sector_z_offset(self.currents.x(i, s), self.sector)
        base = -off  # r = -E - 1 with E in off + Z
        return [base + n for n in range(-self.W, self.W + 1)]

    def describe(self) -> dict:
        d = dict(self.params.describe())
        d.update(D=self.D, W=self.W, sector=[fmt(v) for v in self.sector])
        if self.reverse_cocycle:
            d["reverse_cocycle"] = True
        if self.c_overrides:
            d["c_overrides"] = {f"{a},{b}": fmt(Fraction(v)) for (a, b), v in sorted(self.c_overrides.items())}
        return d

    # comparison
    def compare(self, cells):
        """``cells``: list of (label, lhs Word, rhs Word).  Returns (entries, witness)."""
        entries = 0
        for label, lhs, rhs in cells:
            resid = lhs - rhs
            for st in self.basis:
                out = apply_chain(resid.terms, {st: 1}, self.D)
                if out:
                    key, _ = sorted(out.items(), key=lambda kv: repr(kv[0]))[0]
                    lv = apply_chain(lhs.terms, {st: 1}, self.D).get(key, 0)
                    rv = apply_chain(rhs.terms, {st: 1}, self.D).get(key, 0)
                    return entries, {
                        "cell": label,
                        "in": self.osc.describe_state(st),
                        "out": self.osc.describe_state(key),
                        "lhs": fmt(lv),
                        "rhs": fmt(rv),
                    }
                entries += 1
        return entries, None


_WORKER = {}


def _init_worker(h):
    _WORKER["h"] = h


def _run_chunk(args):
    rid, kw, chunk = args
    h = _WORKER["h"]
    cells = list(_build_cells(h, rid, kw, chunk))
    return h.compare(cells)


def _run(h: Harness, rid, kw, keys, report):
    """Evaluate all cells for the keys, serially or with a forked pool."""
    entries = 0
    witness = None
    if h.jobs > 1 and len(keys) > 1:
        chunks = [keys[n :: h.jobs] for n in range(h.jobs)]
        ctx = mp.get_context("fork")
        with ctx.Pool(h.jobs, initializer=_init_worker, initargs=(h,)) as pool:
            for e, w in pool.map(_run_chunk, [(rid, kw, c) for c in chunks if c]):
                entries += e
                if w and witness is None:
                    witness = w
    else:
        for key in keys:
            e, w = h.compare(list(_build_cells(h, rid, kw, [key])))
            entries += e
            if w:
                witness = w
                break
    report.entries = entries
    report.cells = len(keys)
    report.status = "Fail" if witness else "ExactPass"
    report.witness = witness
    return report


def _sgn(s):
    return "+" if s > 0 else "-"


def _build_cells(h: Harness, rid, kw, keys):
    p = h.params
    q = p.q
    for key in keys:
        if rid == "HH":
            i, j, m, n = key
            lhs = bracket(h.H(i, m), h.H(j, n))
            rhs_v = p.qint(p.A(i, j) * m) * p.qint(p.k * m) / p.scalar(m) if (m + n == 0 and m) else p.zero()
            rhs = h.scalar(rhs_v) if rhs_v != 0 else Word([])
            yield (f"[H{i}[{m}],H{j}[{n}]]", lhs, rhs)
        elif rid == "H_X":
            i, j, s, m, r = key
            lhs = bracket(h.H(i, m), h.X(j, s, r))
            if m == 0:
                rhs = h.X(j, s, r).scale(s * p.A(i, j))
            else:
                c = s * p.qint(p.A(i, j) * m) / p.scalar(m) * p.qpow(-s * p.k * abs(m) / 2)
                rhs = h.X(j, s, r + m).scale(c)
            yield (f"[H{i}[{m}],X{_sgn(s)}{j}[{r}]]", lhs, rhs)
        elif rid == "XX_quadratic":
            i, j, s, r, t = key
            a = p.qpow(s * p.A(i, j))
            b = p.qpow(s * p.A(j, i))
            lhs = h.X(i, s, r + 1) * h.X(j, s, t) - (h.X(i, s, r) * h.X(j, s, t + 1)).scale(a)
            sign = -1 if h.currents.x(i, s).parity * h.currents.x(j, s).parity else 1
            rhs = ((h.X(j, s, t) * h.X(i, s, r + 1)).scale(b) - h.X(j, s, t + 1) * h.X(i, s, r)).scale(sign)
            yield (f"X{_sgn(s)}{i}X{_sgn(s)}{j}[{r},{t}]", lhs, rhs)
        elif rid == "XX_commuting":
            i, j, s, r, t = key
            yield (f"[X{_sgn(s)}{i}[{r}],X{_sgn(s)}{j}[{t}]]", bracket(h.X(i, s, r), h.X(j, s, t)), Word([]))
        elif rid == "X_plus_minus_delta":
            i, j, r, t = key
            lhs = bracket(h.X(i, 1, r), h.X(j, -1, t))
            rhs = Word([])
            n = r + t
            if i == j and Fraction(n).denominator == 1:
                qq = q - 1 / q
                # "symmetric": Psi modes weighted by q^{+-k(r-t)/2};
                # "printed": weighted by q^{+-k r}
                e = p.k * r if kw.get("delta_convention") == "printed" else p.k * (r - t) / 2
                if n >= 0:
                    rhs = rhs + h.Psi(i, 1, n).scale(p.qpow(e) / qq)
                if n <= 0:
                    rhs = rhs - h.Psi(i, -1, n).scale(p.qpow(-e) / qq)
            yield (f"[X+{i}[{r}],X-{j}[{t}]]", lhs, rhs)
        elif rid == "Serre_cubic":
            i, j, s, a, b, c = key
            lhs = Word([])
            for x, y in ((a, b), (b, a)):
                inner = bracket(h.X(i, s, y), h.X(j, s, c), 1 / q)
                lhs = lhs + bracket(h.X(i, s, x), inner, q)
            yield (f"Serre{_sgn(s)}({i},{j})[{a},{b},{c}]", lhs, Word([]))
        elif rid == "Serre_quartic":
            s, a, b, c, d = key
            M = p.M
            lhs = Word([])
            for x, y in ((a, c), (c, a)):
                w = bracket(h.X(M, s, y), h.X(M - 1, s, d), 1 / q)
                w = bracket(h.X(M + 1, s, b), w, q)
                lhs = lhs + bracket(h.X(M, s, x), w)
            yield (f"Quartic{_sgn(s)}[{a},{b},{c},{d}]", lhs, Word([]))
        elif rid == "Psi_consistency":
            i, s, n = key
            yield (f"Psi{_sgn(s)}{i}[{n}]", h.Psi(i, s, s * n), _psi_from_h(h, i, s, n))
        else:
            raise InvalidId(rid)


def _psi_from_h(h: Harness, i, s, n) -> Word:
    """``q^{s h} * [z^{s n}] exp(s (q - q^-1) sum_{m>0} H_{s m} z^{s m})``."""
    p = h.params
    qq = p.q - 1 / p.q
    C = [Word([(1, [])])]
    for d in range(1, n + 1):
        acc = Word([])
        for m in range(1, d + 1):
            acc = acc + (h.H(i, s * m) * C[d - m]).scale(s * qq * m)
        C.append(acc.scale(p.scalar(Fraction(1, d))))
    return Word([(1, [QPowZero(h.currents.h_zero(i), s)])]) * C[n]


def _keys(h: Harness, rid, kw):
    p = h.params
    r = p.rank
    nodes = range(1, r + 1)
    W = h.W
    window = range(-W, W + 1)
    signs = kw.get("signs", (1, -1))
    if rid == "HH":
        return [(i, j, m, n) for i in nodes for j in nodes for m in window for n in window if m and n]
    if rid == "H_X":
        return [
            (i, j, s, m, rr)
            for i in nodes
            for j in nodes
            for s in signs
            for m in window
            for rr in h.x_modes(j, s)
        ]
    if rid in ("XX_quadratic", "XX_commuting"):
        want = rid == "XX_quadratic"
        return [
            (i, j, s, a, b)
            for i in nodes
            for j in nodes
            if (p.A(i, j) != 0) == want
            for s in signs
            for a in h.x_modes(i, s)
            for b in h.x_modes(j, s)
        ]
    if rid == "X_plus_minus_delta":
        return [(i, j, a, b) for i in nodes for j in nodes for a in h.x_modes(i, 1) for b in h.x_modes(j, -1)]
    if rid == "Serre_cubic":
        out = []
        for i in nodes:
            for j in nodes:
                if abs(p.A(i, j)) != 1 or i == p.M or i == j:
                    continue
                for s in signs:
                    mi, mj = h.x_modes(i, s), h.x_modes(j, s)
                    for a, b in itertools.combinations_with_replacement(mi, 2):
                        for c in mj:
                            out.append((i, j, s, a, b, c))
        return out
    if rid == "Serre_quartic":
        M = p.M
        out = []
        for s in signs:
            mM, mP, mL = h.x_modes(M, s), h.x_modes(M + 1, s), h.x_modes(M - 1, s)
            for a, c in itertools.combinations_with_replacement(mM, 2):
                for b in mP:
                    for d in mL:
                        out.append((s, a, b, c, d))
        return out
    if rid == "Psi_consistency":
        return [(i, s, n) for i in nodes for s in signs for n in range(0, W + 1)]
    raise InvalidId(rid)


def check_relation(rid, harness: Harness, **kw) -> RelationReport:
    """Verify one relation family on the harness' sector, caps and window."""
    if rid not in RELATION_IDS:
        raise InvalidId(rid)
    p = harness.params
    rep = RelationReport(rid, harness.describe(), "Skipped", basis_size=len(harness.basis))
    t0 = time.perf_counter()
    if rid == "HighestWeight":
        raise InvalidId("use check_highest_weight")
    if rid == "Serre_quartic" and (p.M < 2 or p.N < 2):
        rep.reason = "requires M >= 2 and N >= 2"
        return rep
    keys = _keys(harness, rid, kw)
    if not keys:
        rep.reason = "no admissible index pairs"
        return rep
    rep.offsets = {
        f"X{_sgn(s)}{i}": fmt(sector_z_offset(harness.currents.x(i, s), harness.sector))
        for i in range(1, p.rank + 1)
        for s in (1, -1)
    }
    _run(harness, rid, kw, keys, rep)
    rep.wall_time = time.perf_counter() - t0
    return rep


def check_highest_weight(l, harness_or_params, D=2, W=2) -> RelationReport:
    """``H^i|l> = l_i|l>``, and positive modes and ``X_0^{+,i}`` annihilate ``|l>``."""
    if isinstance(harness_or_params, Harness):
        params = harness_or_params.params
    else:
        params = harness_or_params
    t0 = time.perf_counter()
    rep = RelationReport("HighestWeight", {**params.describe(), "l": [str(v) for v in l], "D": D, "W": W}, "Skipped")
    if params.M == params.N:
        rep.reason = "SingularCartan"
        return rep
    if params.k + params.g == 0:
        raise CriticalLevel("k = -g")
    osc = Oscillators(params)
    sector = osc.charge_from(p_a=l)
    h = Harness(params, D=D, W=W, sector=sector)
    if isinstance(harness_or_params, Harness):
        h.currents = Currents(h.osc, harness_or_params.c_overrides)
    st = (sector, ())
    checks = []
    eig = {}
    for i in range(1, params.rank + 1):
        z = h.currents.h_zero(i)
        eig[i] = z.eigenvalue(sector)
        checks.append((f"H{i}", Word.op(z), h.scalar(params.scalar(Fraction(l[i - 1])))))
        for m in range(1, W + 1):
            checks.append((f"H{i}[{m}]", h.H(i, m), Word([])))
        for s in (1, -1):
            for r in h.x_modes(i, s):
                if r > 0 or (r == 0 and s > 0):
                    checks.append((f"X{_sgn(s)}{i}[{r}]", h.X(i, s, r), Word([])))
    h.basis = [st]
    entries, witness = h.compare(checks)
    rep.entries = entries
    rep.cells = len(checks)
    rep.basis_size = 1
    rep.status = "Fail" if witness else "ExactPass"
    rep.witness = witness
    rep.extra = {"eigenvalues": {f"H{i}": str(v) for i, v in eig.items()}}
    rep.wall_time = time.perf_counter() - t0
    return rep


def highest_weight_guard(params):
    if params.M == params.N:
        raise SingularCartan("M = N")
