"""Normal-ordered exponentials of free bosons and their Fourier modes.

A :class:`VertexSpec` is ``prefactor * :exp(sum of field terms):``.  The field
terms are the free-boson fields of the construction evaluated at ``q**shift * z``:

* ``pm``    ``x_{+-}(z) = +-(q - q^-1) sum_{m>0} x_{+-m} z^{-+m} +- x_0 log q``
* ``full``  ``x(z) = -sum_{m!=0} x_m/[m] z^{-m} + Q_x + x_0 log z``
* ``ratio`` ``(L/M x)(z; alpha)``, a ``full`` field with mode weights
  ``prod[L m]/prod[M m] * q^{-alpha|m|}`` and zero-mode weight ``prod L/prod M``.

Normal ordering puts positive modes and ``x_0`` on the right, ``exp(Q)`` (in
the canonical order of :class:`Oscillators`) in the middle, negative modes on
the left, so on a state of charge ``p`` and degree ``d``::

    V(z)|p, d> = sum_n z^{gamma(p) + n} (degree d + n part),  gamma(p) = lam . p

Modes are extracted as "coefficient of ``z**E``" for an explicit rational E.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb

from .heisenberg import Oscillators, add_vectors, degree

__all__ = [
    "CosetMismatch",
    "CurrentSpec",
    "FieldTerm",
    "LinearMode",
    "ModeOp",
    "VertexSpec",
    "ZeroModeOp",
    "apply_chain",
    "current_mode_matrix",
    "sector_z_offset",
]


class CosetMismatch(ValueError):
    """A requested z-exponent is not in the coset the operator populates."""


@dataclass(frozen=True)
class FieldTerm:
    kind: str  # "pm" | "full" | "ratio"
    osc: int
    coef: Fraction = Fraction(1)
    shift: Fraction = Fraction(0)
    sigma: int = 0  # +1/-1 for pm
    L: tuple = ()
    Mlist: tuple = ()
    alpha: Fraction = Fraction(0)

    def shifted(self, beta) -> "FieldTerm":
        return replace(self, shift=self.shift + Fraction(beta))

    def scaled(self, c) -> "FieldTerm":
        return replace(self, coef=self.coef * Fraction(c))

    def zero_weight(self) -> Fraction:
        """Coefficient of ``Q_x`` (and of ``x_0 log z``)."""
        if self.kind == "full":
            return self.coef
        if self.kind == "ratio":
            w = self.coef
            for l in self.L:
                w *= l
            for m in self.Mlist:
                w /= m
            return w
        return Fraction(0)

    def logq_weight(self) -> Fraction:
        """Coefficient of ``x_0 log q``."""
        if self.kind == "pm":
            return self.sigma * self.coef
        return self.zero_weight() * self.shift

    def mode_coefficient(self, n: int, p):
        """Coefficient of ``x_n z^{-n}`` (``n != 0``)."""
        q = p.q
        if self.kind == "pm":
            if (n > 0) != (self.sigma > 0):
                return p.zero()
            return p.scalar(self.sigma * self.coef) * (q - 1 / q) * p.qpow(-self.shift * n)
        val = -p.scalar(self.coef) * p.qpow(-self.shift * n) / p.qint(n)
        if self.kind == "ratio":
            for l in self.L:
                val *= p.qint(l * n)
            for m in self.Mlist:
                val /= p.qint(m * n)
            val *= p.qpow(-self.alpha * abs(n))
        return val


class VertexSpec:
    """``prefactor * :exp(sum(terms)):`` acting on the Fock module."""

    def __init__(self, osc: Oscillators, terms, prefactor=None, label: str = ""):
        self.osc = osc
        self.params = osc.params
        self.terms = tuple(t for t in terms if t.coef != 0)
        self.prefactor = self.params.one() if prefactor is None else prefactor
        self.label = label
        lam: dict = {}
        nu: dict = {}
        for t in self.terms:
            w = t.zero_weight()
            if w:
                lam[t.osc] = lam.get(t.osc, Fraction(0)) + w
            v = t.logq_weight()
            if v:
                nu[t.osc] = nu.get(t.osc, Fraction(0)) + v
        self.lam = {x: v for x, v in lam.items() if v}
        self.nu = {x: v for x, v in nu.items() if v}
        self.written_sign = self._written_sign()
        self._alpha: dict = {}
        self._beta: dict = {}
        self._creation: list = [{(): self.params.one()}]
        self._annihilated: dict = {}
        self._results: dict = {}
        self._shift: dict = {}
        self._offset: dict = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"VertexSpec({self.label or len(self.terms)})"

    def _written_sign(self) -> int:
        # exp(lam.Q) is the product of its fermionic factors in the order they
        # are written; relative to the canonical product this costs a sign
        seq = []
        for t in self.terms:
            if t.osc in self.lam and t.osc in self.osc.fermionic and t.osc not in seq:
                seq.append(t.osc)
        rank = self.osc.ferm_rank
        parity = 0
        for n, a in enumerate(seq):
            for b in seq[n + 1 :]:
                if rank[a] < rank[b]:
                    parity += int(self.lam[a]) * int(self.lam[b])
        return -1 if parity % 2 else 1

    # -- derived data --------------------------------------------------
    def shifted(self, beta) -> "VertexSpec":
        """The operator evaluated at ``q**beta * z``."""
        return VertexSpec(self.osc, [t.shifted(beta) for t in self.terms], self.prefactor, self.label)

    def alpha(self, x: int, n: int):
        key = (x, n)
        try:
            return self._alpha[key]
        except KeyError:
            p = self.params
            val = p.zero()
            for t in self.terms:
                if t.osc == x:
                    val += t.mode_coefficient(n, p)
            self._alpha[key] = val
            return val

    def oscillators(self) -> set:
        return {t.osc for t in self.terms}

    def z_offset(self, charge) -> Fraction:
        """``gamma(p) = lam . p``: exponent of z produced by the ``x_0 log z`` terms."""
        try:
            return self._offset[charge]
        except KeyError:
            v = sum((lam * charge[x] for x, lam in self.lam.items()), Fraction(0))
            self._offset[charge] = v
            return v

    def charge_shift(self, charge) -> tuple:
        try:
            return self._shift[charge]
        except KeyError:
            v = self.osc.shift_charge(charge, self.lam)
            self._shift[charge] = v
            return v

    def _beta_row(self, m: int) -> dict:
        """``beta_{y,m} = sum_x alpha_{x,m} [x_m, y_{-m}]``; annihilators act as shifts."""
        try:
            return self._beta[m]
        except KeyError:
            pass
        osc = self.osc
        row = {}
        xs = self.oscillators()
        for y in range(osc.size):
            val = self.params.zero()
            for x in xs:
                a = self.alpha(x, m)
                if a != 0:
                    g = osc.metric(x, y, m)
                    if g != 0:
                        val += a * g
            if val != 0:
                row[y] = val
        self._beta[m] = row
        return row

    def annihilate(self, mono) -> dict:
        """``E_+(z)`` on a monomial: ``{n: poly}`` where ``n`` is the degree lowered."""
        try:
            return self._annihilated[mono]
        except KeyError:
            pass
        zero = self.params.zero()
        result = {0: {(): self.params.one()}}
        groups: dict = {}
        for f in mono:
            groups[f] = groups.get(f, 0) + 1
        for (y, m), cnt in groups.items():
            beta = self._beta_row(m).get(y, zero)
            new = {}
            for j in range(cnt + 1):
                if j and beta == 0:
                    break
                fac = comb(cnt, j) * beta**j if j else 1
                rest = ((y, m),) * (cnt - j)
                for n, poly in result.items():
                    tgt = new.setdefault(n + m * j, {})
                    for mon, c in poly.items():
                        key = tuple(sorted(mon + rest))
                        v = tgt.get(key, zero) + c * fac
                        tgt[key] = v
            result = {n: {k: v for k, v in poly.items() if v != 0} for n, poly in new.items()}
        result = {n: poly for n, poly in result.items() if poly}
        self._annihilated[mono] = result
        return result

    def creation(self, n: int) -> dict:
        """Degree-n part of ``E_-(z) = exp(sum_{m>0} alpha_{x,-m} x_{-m} z^m)``."""
        with self._lock:
            while len(self._creation) <= n:
                d = len(self._creation)
                acc: dict = {}
                for m in range(1, d + 1):
                    lin = [(x, self.alpha(x, -m)) for x in self.oscillators()]
                    lin = [(x, a) for x, a in lin if a != 0]
                    if not lin:
                        continue
                    for mon, c in self._creation[d - m].items():
                        for x, a in lin:
                            key = tuple(sorted(mon + ((x, m),)))
                            acc[key] = acc.get(key, 0) + c * a * m
                inv = self.params.scalar(Fraction(1, d))
                self._creation.append({k: v * inv for k, v in acc.items() if v != 0})
            return self._creation[n]

    # -- action --------------------------------------------------------
    def transition(self, charge, E) -> tuple:
        """``(out_charge, degree_delta)`` for the ``z**E`` coefficient, or raise."""
        delta = Fraction(E) - self.z_offset(charge)
        if delta.denominator != 1:
            raise CosetMismatch(f"z^{E} not in coset {self.z_offset(charge)} + Z for {self}")
        return self.charge_shift(charge), int(delta)

    def apply_state(self, state, E) -> dict:
        """Coefficient of ``z**E`` in ``V(z)|state>``."""
        key = (state, E)
        try:
            return self._results[key]
        except KeyError:
            pass
        charge, mono = state
        out_charge, delta = self.transition(charge, E)
        d = degree(mono)
        result: dict = {}
        if d + delta >= 0:
            p = self.params
            scal = self.prefactor * (self.written_sign * self.osc.cocycle_sign(self.lam, charge))
            logq = sum((v * charge[x] for x, v in self.nu.items()), Fraction(0))
            if logq:
                scal = scal * p.qpow(logq)
            for n, poly in self.annihilate(mono).items():
                nc = delta + n
                if nc < 0:
                    continue
                cre = self.creation(nc)
                for m1, c1 in poly.items():
                    for m2, c2 in cre.items():
                        key2 = (out_charge, tuple(sorted(m1 + m2)))
                        result[key2] = result.get(key2, 0) + scal * c1 * c2
            result = {k: v for k, v in result.items() if v != 0}
        with self._lock:
            self._results[key] = result
        return result


@dataclass
class CurrentSpec:
    """Finite sum ``sum_c weight_c * z**zshift_c * V_c(z)`` with a Z2 parity."""

    name: str
    terms: list  # of (weight, zshift, VertexSpec)
    parity: int = 0
    meta: dict = field(default_factory=dict)

    def __repr__(self):
        return f"CurrentSpec({self.name})"

    def transitions(self, charge, E) -> list:
        out = []
        for w, s, spec in self.terms:
            out.append(spec.transition(charge, Fraction(E) - s))
        return out

    def apply_state(self, state, E, viable=None) -> dict:
        result: dict = {}
        d = degree(state[1])
        for w, s, spec in self.terms:
            Ec = Fraction(E) - s
            oc, delta = spec.transition(state[0], Ec)
            if d + delta < 0 or (viable is not None and not viable(oc, d + delta)):
                continue
            result = add_vectors(result, spec.apply_state(state, Ec), w)
        return result

    def shifted(self, beta) -> "CurrentSpec":
        """The current evaluated at ``q**beta * z``."""
        p = next(iter(self.terms))[2].params if self.terms else None
        terms = [(w * p.qpow(Fraction(beta) * s), s, spec.shifted(beta)) for w, s, spec in self.terms]
        return CurrentSpec(self.name, terms, self.parity, dict(self.meta))


class ModeOp:
    """Coefficient of ``z**E`` of a current, as an operator on Fock vectors."""

    def __init__(self, current: CurrentSpec, E, label: str = ""):
        self.current = current
        self.E = Fraction(E)
        self.parity = current.parity
        self.label = label or f"{current.name}[z^{self.E}]"
        self._tcache: dict = {}

    def __repr__(self):
        return self.label

    def transitions(self, charge) -> list:
        try:
            return self._tcache[charge]
        except KeyError:
            t = self.current.transitions(charge, self.E)
            self._tcache[charge] = t
            return t

    def apply_state(self, state, viable=None) -> dict:
        return self.current.apply_state(state, self.E, viable)


class LinearMode:
    """``sum_x h_x x_m`` for a fixed nonzero mode ``m``."""

    def __init__(self, osc: Oscillators, coeffs: dict, m: int, label: str = ""):
        self.osc = osc
        self.coeffs = {x: c for x, c in coeffs.items() if c != 0}
        self.m = m
        self.parity = 0
        self.label = label or f"lin[{m}]"

    def __repr__(self):
        return self.label

    def transitions(self, charge) -> list:
        return [(charge, -self.m)]

    def apply_state(self, state, viable=None) -> dict:
        charge, mono = state
        d = degree(mono)
        if d - self.m < 0 or (viable is not None and not viable(charge, d - self.m)):
            return {}
        out: dict = {}
        m = self.m
        if m < 0:
            for x, c in self.coeffs.items():
                key = (charge, tuple(sorted(mono + ((x, -m),))))
                out[key] = out.get(key, 0) + c
        else:
            # x_m acts as sum_y [x_m, y_-m] d/dy_-m
            seen = set()
            for idx, (y, lvl) in enumerate(mono):
                if lvl != m or (y, lvl) in seen:
                    continue
                seen.add((y, lvl))
                mult = sum(1 for f in mono if f == (y, lvl))
                val = 0
                for x, c in self.coeffs.items():
                    g = self.osc.metric(x, y, m)
                    if g != 0:
                        val += c * g
                if val == 0:
                    continue
                rest = list(mono)
                rest.remove((y, lvl))
                key = (charge, tuple(rest))
                out[key] = out.get(key, 0) + val * mult
        return {k: v for k, v in out.items() if v != 0}


class ZeroModeOp:
    """``sum_x h_x x_0``: diagonal on charge sectors."""

    def __init__(self, osc: Oscillators, coeffs: dict, label: str = ""):
        self.osc = osc
        self.coeffs = {x: Fraction(c) for x, c in coeffs.items() if c != 0}
        self.parity = 0
        self.label = label or "zero"

    def __repr__(self):
        return self.label

    def eigenvalue(self, charge) -> Fraction:
        return sum((c * charge[x] for x, c in self.coeffs.items()), Fraction(0))

    def transitions(self, charge) -> list:
        return [(charge, 0)]

    def apply_state(self, state, viable=None) -> dict:
        if viable is not None and not viable(state[0], degree(state[1])):
            return {}
        ev = self.eigenvalue(state[0])
        if ev == 0:
            return {}
        return {state: self.osc.params.scalar(ev)}


class ScalarOp:
    """Multiplication by a scalar (used for central terms)."""

    parity = 0

    def __init__(self, value, label: str = "scalar"):
        self.value = value
        self.label = label

    def __repr__(self):
        return self.label

    def transitions(self, charge) -> list:
        return [(charge, 0)]

    def apply_state(self, state, viable=None) -> dict:
        if self.value == 0 or (viable is not None and not viable(state[0], degree(state[1]))):
            return {}
        return {state: self.value}


def apply_chain(terms, vec: dict, max_degree: int | None = None) -> dict:
    """Apply ``sum_t coef_t * (op_1 op_2 ... op_r)`` to ``vec``.

    Operators in each product are listed left to right and applied right to
    left.  With ``max_degree`` set, only output components of degree at most
    ``max_degree`` are kept, and intermediate components that cannot reach that
    range through the remaining operators are never computed.  The pruning is
    exact: every operator's degree change is determined by the charge sector.
    """
    total: dict = {}
    for coef, ops in terms:
        if coef == 0:
            continue
        ops = list(ops)
        memo: dict = {}

        def reach(charge, d, k):
            # can ops[:k] (applied right to left, ending with ops[0]) land in [0, D]?
            key = (charge, d, k)
            if key in memo:
                return memo[key]
            if k == 0:
                ok = max_degree is None or d <= max_degree
            else:
                ok = False
                try:
                    for oc, delta in ops[k - 1].transitions(charge):
                        if d + delta >= 0 and reach(oc, d + delta, k - 1):
                            ok = True
                            break
                except CosetMismatch:
                    ok = False
            memo[key] = ok
            return ok

        cur = vec
        for k in range(len(ops) - 1, -1, -1):
            op = ops[k]
            nxt: dict = {}

            def viable(charge, d, k=k):
                return reach(charge, d, k)

            for state, c in cur.items():
                if max_degree is not None and not reach(state[0], degree(state[1]), k + 1):
                    continue
                res = op.apply_state(state, viable if max_degree is not None else None)
                for key, v in res.items():
                    nv = nxt.get(key, 0) + c * v
                    nxt[key] = nv
            cur = {key: v for key, v in nxt.items() if v != 0}
            if not cur:
                break
        total = add_vectors(total, cur, coef)
    if max_degree is not None:
        total = {k: v for k, v in total.items() if degree(k[1]) <= max_degree}
    return total


def sector_z_offset(current: CurrentSpec, charge) -> Fraction:
    """Fractional part of the z-exponents the current produces on ``charge``.

    Returns the offset in ``[0, 1)``; all constituents must agree modulo 1.
    """
    offs = {(spec.z_offset(charge) + s) % 1 for _, s, spec in current.terms}
    if len(offs) > 1:
        raise CosetMismatch(f"{current.name}: constituents populate different cosets {sorted(offs)}")
    return offs.pop() if offs else Fraction(0)


def current_mode_matrix(current: CurrentSpec, E, in_basis, out_cap: int | None = None):
    """Sparse matrix ``{(out_state, in_state): value}`` of the ``z**E`` coefficient."""
    op = ModeOp(current, E)
    mat = {}
    for st in in_basis:
        res = apply_chain([(1, [op])], {st: 1}, out_cap)
        for key, v in res.items():
            mat[(key, st)] = v
    return mat
