"""Free bosons a^i, b^{i,j}, c^{i,j}, their zero modes, and the Fock module.

A Fock basis state is a pair ``(charge, mono)``:

* ``charge`` is a tuple of exact zero-mode eigenvalues, one per oscillator
  (``a_0^i``, ``b_0^{i,j}``, ``c_0^{i,j}`` in :class:`Oscillators` order);
* ``mono`` is a sorted tuple of ``(osc, level)`` pairs, one per creation
  operator ``osc_{-level}`` (``level >= 1``), repeated with multiplicity.

Vectors are plain dicts ``{(charge, mono): coefficient}`` without zero entries.
"""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .scalars import CriticalLevel, DeformationParams, SingularCartan

__all__ = [
    "Charge",
    "Osc",
    "Oscillators",
    "ZeroMode",
    "add_vectors",
    "degree",
    "enumerate_basis",
    "highest_weight_state",
    "scale_vector",
]


class ZeroMode(ValueError):
    """A nonzero-mode bracket was requested with a zero mode index."""


class BadIndices(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Osc:
    family: str  # "a", "b" or "c"
    i: int
    j: int = 0

    def __str__(self):
        if self.family == "a":
            return f"a{self.i}"
        return f"{self.family}{self.i}{self.j}"


class Charge(tuple):
    """Tuple of zero-mode eigenvalues with a cached hash."""

    def __hash__(self):
        try:
            return self._h
        except AttributeError:
            self._h = tuple.__hash__(self)
            return self._h


class Oscillators:
    """Oscillator registry for a given (M, N): indices, metrics, zero-mode data."""

    def __init__(self, params, reverse_cocycle: bool = False):
        self.params = params
        M, N = params.M, params.N
        self.M, self.N = M, N
        osc = [Osc("a", i) for i in range(1, M + N)]
        pairs = [(i, j) for i in range(1, M + N + 1) for j in range(i + 1, M + N + 1)]
        osc += [Osc("b", i, j) for i, j in pairs]
        osc += [Osc("c", i, j) for i, j in pairs]
        self.osc = osc
        self.index = {o: n for n, o in enumerate(osc)}
        self.size = len(osc)
        self.pairs = pairs
        self.reverse_cocycle = reverse_cocycle
        # fermionic zero modes Q_b^{i,j} with nu_i nu_j = -1, canonical order
        ferm = [p for p in pairs if params.nu(p[0]) * params.nu(p[1]) == -1]
        self.fermionic = {self.index[Osc("b", *p)] for p in ferm}
        # position in the canonical product: larger (i, j) sits further left
        order = sorted(ferm, reverse=not reverse_cocycle)
        self.ferm_rank = {self.index[Osc("b", *p)]: r for r, p in enumerate(reversed(order))}
        self._lock = threading.Lock()
        self._gcache: dict = {}
        self._charges: dict = {}

    def intern(self, values) -> Charge:
        """Canonical :class:`Charge` object for the given eigenvalues."""
        ch = Charge(values)
        return self._charges.setdefault(ch, ch)

    # -- identifiers ---------------------------------------------------
    def a(self, i):
        if not 1 <= i <= self.M + self.N - 1:
            raise BadIndices(f"a^{i}")
        return self.index[Osc("a", i)]

    def b(self, i, j):
        if not 1 <= i < j <= self.M + self.N:
            raise BadIndices(f"b^{i},{j}")
        return self.index[Osc("b", i, j)]

    def c(self, i, j):
        if not 1 <= i < j <= self.M + self.N:
            raise BadIndices(f"c^{i},{j}")
        return self.index[Osc("c", i, j)]

    def pair_sign(self, i, j):
        return self.params.nu(i) * self.params.nu(j)

    # -- brackets -------------------------------------------------------
    def metric(self, x: int, y: int, m: int):
        """``[x_m, y_{-m}]`` for ``m != 0``."""
        if m == 0:
            raise ZeroMode("zero modes pair with Q, not with other modes")
        key = (x, y, m)
        try:
            return self._gcache[key]
        except KeyError:
            pass
        p = self.params
        ox, oy = self.osc[x], self.osc[y]
        val = p.zero()
        if ox.family == oy.family == "a":
            A = p.A(ox.i, oy.i)
            if A:
                val = p.qint((p.k + p.g) * m) * p.qint(A * m) / p.scalar(m)
        elif ox == oy:
            s = self.pair_sign(ox.i, ox.j)
            qm = p.qint(m)
            val = qm * qm / p.scalar(m) * p.scalar(-s if ox.family == "b" else s)
        with self._lock:
            self._gcache[key] = val
        return val

    def mode_bracket(self, x, m: int, y, n: int):
        """``[x_m, y_n]`` for nonzero m, n; ``x``/``y`` are :class:`Osc` or indices."""
        if m == 0 or n == 0:
            raise ZeroMode("mode_bracket requires nonzero modes")
        if isinstance(x, Osc):
            x = self.index[x]
        if isinstance(y, Osc):
            y = self.index[y]
        if m + n != 0:
            return self.params.zero()
        return self.metric(x, y, m)

    def zero_metric(self, x: int, y: int) -> Fraction:
        """``[x_0, Q_y]``."""
        p = self.params
        ox, oy = self.osc[x], self.osc[y]
        if ox.family == oy.family == "a":
            return (p.k + p.g) * p.A(ox.i, oy.i)
        if ox == oy:
            s = self.pair_sign(ox.i, ox.j)
            return Fraction(-s if ox.family == "b" else s)
        return Fraction(0)

    # -- zero modes -----------------------------------------------------
    def shift_charge(self, charge: tuple, lam: dict) -> tuple:
        """Eigenvalues after ``exp(sum_y lam_y Q_y)``."""
        if not lam:
            return self.intern(charge)
        out = list(charge)
        p = self.params
        kg = p.k + p.g
        for y, l in lam.items():
            oy = self.osc[y]
            if oy.family == "a":
                for i in range(1, self.M + self.N):
                    A = p.A(i, oy.i)
                    if A:
                        out[self.a(i)] += l * kg * A
            else:
                out[y] += l * self.zero_metric(y, y)
        return self.intern(out)

    def cocycle_sign(self, lam: dict, charge: tuple) -> int:
        """Sign from moving the canonically ordered ``exp(lam.Q)`` into place.

        The state of charge ``charge`` is the canonically ordered product of
        ``exp(n_r Q_r)`` over fermionic ``Q_r`` applied to the vacuum.
        """
        ferm = [(self.ferm_rank[y], y, l) for y, l in lam.items() if y in self.fermionic and l]
        if not ferm:
            return 1
        counts = {}
        for y in self.fermionic:
            n = charge[y] * self.zero_metric(y, y)  # eigenvalue -> number of Q factors
            counts[self.ferm_rank[y]] = n
        parity = 0
        for r, y, l in sorted(ferm):  # rightmost factor first
            if Fraction(l).denominator != 1:
                raise ValueError("fermionic zero-mode exponents must be integral")
            left = sum(n for rr, n in counts.items() if rr > r)
            if Fraction(left).denominator != 1:
                raise ValueError("non-integral fermionic charge")
            parity += int(l) * int(left)
            counts[r] += l
        return -1 if parity % 2 else 1

    def reorder_sign(self, lam1: dict, lam2: dict) -> int:
        """``P(lam1) P(lam2) = sign * P(lam1 + lam2)`` for canonical products ``P``."""
        parity = 0
        for s, l2 in lam2.items():
            if s not in self.fermionic or not l2:
                continue
            for r, l1 in lam1.items():
                if r in self.fermionic and l1 and self.ferm_rank[r] < self.ferm_rank[s]:
                    parity += int(l1) * int(l2)
        return -1 if parity % 2 else 1

    def vacuum_charge(self) -> tuple:
        return self.intern(Fraction(0) for _ in range(self.size))

    def charge_from(self, p_a=None, p_b=None, p_c=None) -> tuple:
        """Sector with ``a_0^i = p_a[i]``, ``b_0^{ij} = p_b[(i,j)]``, ``c_0^{ij} = p_c[(i,j)]``."""
        ch = list(self.vacuum_charge())
        for i, v in enumerate(p_a or (), start=1):
            ch[self.a(i)] = Fraction(v)
        for (i, j), v in (p_b or {}).items():
            ch[self.b(i, j)] = Fraction(v)
        for (i, j), v in (p_c or {}).items():
            ch[self.c(i, j)] = Fraction(v)
        return self.intern(ch)

    def is_restricted(self, charge: tuple) -> bool:
        for i, j in self.pairs:
            if self.pair_sign(i, j) == 1 and charge[self.b(i, j)] != -charge[self.c(i, j)]:
                return False
        return True

    def describe_state(self, state) -> str:
        charge, mono = state
        ch = ",".join(
            f"{self.osc[n]}={v}" for n, v in enumerate(charge) if v != 0
        )
        ops = "".join(f"{self.osc[x]}[-{m}]" for x, m in mono)
        return f"{ops or '1'}|{ch or '0'}>"


def degree(mono) -> int:
    return sum(m for _, m in mono)


@lru_cache(maxsize=None)
def _multisets(n_osc: int, d: int, max_level: int, max_osc: int) -> tuple:
    """Multisets of (osc, level) with total level d, canonical (non-increasing) order."""
    if d == 0:
        return ((),)
    out = []
    for level in range(min(d, max_level), 0, -1):
        top_osc = max_osc if level == max_level else n_osc - 1
        for x in range(top_osc, -1, -1):
            for rest in _multisets(n_osc, d - level, level, x):
                out.append(((x, level),) + rest)
    return tuple(out)


def enumerate_basis(osc: Oscillators, charge: tuple, d: int) -> list:
    """All Fock basis states of exact degree ``d`` in the given sector."""
    if d < 0:
        return []
    monos = _multisets(osc.size, d, d, osc.size - 1)
    return [(charge, tuple(sorted(m))) for m in monos]


def basis_upto(osc: Oscillators, charge: tuple, d: int) -> list:
    out = []
    for n in range(d + 1):
        out.extend(enumerate_basis(osc, charge, n))
    return out


def highest_weight_state(osc: Oscillators, l) -> dict:
    """``|lambda> = |p_a = l, 0, 0>`` as a vector; ``a_0^i`` acts by ``l_i``."""
    p = osc.params
    if p.M == p.N:
        raise SingularCartan("the finite Cartan matrix is singular for M = N")
    if p.k + p.g == 0:
        raise CriticalLevel("k = -g")
    if len(l) != p.M + p.N - 1:
        raise BadIndices("weight vector has the wrong length")
    return {(osc.charge_from(p_a=l), ()): p.one()}


def add_vectors(u: dict, v: dict, coef=1) -> dict:
    out = dict(u)
    for key, val in v.items():
        new = out.get(key, 0) + coef * val
        if new == 0:
            out.pop(key, None)
        else:
            out[key] = new
    return out


def scale_vector(v: dict, coef) -> dict:
    if coef == 0:
        return {}
    return {key: coef * val for key, val in v.items()}


def mono_counter(mono) -> Counter:
    return Counter(mono)
