"""The bosonized currents: Psi_{+-}^i, X^{+-,i}, H-modes and screening currents S_i.

Field arguments are stored as exact exponents of q (``shift``); a constituent
written ``:exp(b^{i,j}(q^s z) + ...):`` becomes ``FieldTerm("full", b_ij, shift=s)``.
Undefined bosons ``b^{i,i}`` (which arise at the boundary of the difference
fields) are zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .heisenberg import BadIndices, Oscillators
from .scalars import CriticalLevel
from .vertex import CurrentSpec, FieldTerm, LinearMode, VertexSpec, ZeroModeOp

__all__ = [
    "CoefficientTable",
    "Currents",
    "ZeroCoefficient",
    "coefficient_tables",
]

F = Fraction


class ZeroCoefficient(ValueError):
    pass


@dataclass
class CoefficientTable:
    c: dict
    d1: dict
    d2: dict
    d3: dict
    e: dict


def coefficient_tables(params, c_overrides=None) -> CoefficientTable:
    """Populate c, d^1, d^2, d^3 and e for the given (M, N, k)."""
    M, N, k = params.M, params.N, params.k
    r = M + N - 1
    c = {(i, j): params.one() for i in range(1, r + 1) for j in range(1, i + 1)}
    for key, v in (c_overrides or {}).items():
        c[tuple(key)] = params.scalar(v) if not hasattr(v, "numerator") or isinstance(v, (int, F)) else v
    if any(v == 0 for v in c.values()):
        raise ZeroCoefficient("all c_{i,j} must be nonzero")
    nu = params.nu
    qp = params.qpow

    d1 = {}
    for i in range(1, r + 1):
        for j in range(1, i):
            if i <= M - 1:
                f = params.one()
            elif i == M:
                f = qp(j - 1)
            elif j <= M:
                f = qp(-k - 1)
            else:
                f = params.one()
            d1[(i, j)] = nu(i + 1) / c[(i, j)] * f
    d2 = {}
    for i in range(1, r + 1):
        f = qp(M - 1) if i == M else params.one()
        d2[(i, i)] = nu(i + 1) / c[(i, i)] * f
    d3 = {}
    for i in range(1, r + 1):
        for j in range(i + 2, M + N + 1):
            if i <= M - 1 and j <= M:
                f = params.one()
            elif i <= M - 1:
                f = qp(k + 3 * M + 1 - 2 * j)
            elif i == M:
                f = qp((M - 1) * (j - M))
            else:
                f = params.one()
            prod = params.one()
            for l in range(1, j - i):
                prod = prod * c[(i + l, i + 1)] / c[(i + l, i)]
            d3[(i, j)] = nu(i + 1) / c[(i, i)] * prod * f
    e = {}
    for i in range(1, r + 1):
        if i <= M - 1:
            e[(i, i + 1)] = 1 / d2[(i, i)]
        elif i == M:
            e[(i, i + 1)] = -qp(-N + 1) / d2[(i, i)]
        else:
            e[(i, i + 1)] = -1 / d2[(i, i)]
        for j in range(i + 2, M + N + 1):
            if i <= M - 1 and j <= M:
                e[(i, j)] = 1 / d3[(i, j)]
            elif i <= M - 1:
                e[(i, j)] = qp(k + 1 + M - N) / d3[(i, j)]
            elif i == M:
                e[(i, j)] = -qp(j - M - N) / d3[(i, j)]
            else:
                e[(i, j)] = -1 / d3[(i, j)]
    return CoefficientTable(c, d1, d2, d3, e)


class Fields:
    """Builders for the free-boson fields as lists of :class:`FieldTerm`."""

    def __init__(self, osc: Oscillators):
        self.osc = osc

    def _pair(self, i, j):
        if i == j:
            return None
        if i > j:
            raise BadIndices(f"pair ({i},{j})")
        return (i, j)

    def apm(self, i, sigma, beta):
        return [FieldTerm("pm", self.osc.a(i), F(1), F(beta), sigma)]

    def bpm(self, i, j, sigma, beta):
        if self._pair(i, j) is None:
            return []
        return [FieldTerm("pm", self.osc.b(i, j), F(1), F(beta), sigma)]

    def b(self, i, j, beta):
        if self._pair(i, j) is None:
            return []
        return [FieldTerm("full", self.osc.b(i, j), F(1), F(beta))]

    def c(self, i, j, beta):
        if self._pair(i, j) is None:
            return []
        return [FieldTerm("full", self.osc.c(i, j), F(1), F(beta))]

    def bc(self, i, j, beta):
        return self.b(i, j, beta) + self.c(i, j, beta)

    def dl(self, eps, sigma, i, j, beta):
        """``(Delta_L^eps b_sigma^{i,j})(q^beta z)``."""
        if eps == 0:
            return self.bpm(i + 1, j, sigma, beta) + self.bpm(i, j, sigma, beta)
        return self.bpm(i + 1, j, sigma, beta + eps) + neg(self.bpm(i, j, sigma, beta))

    def dr(self, eps, sigma, i, j, beta):
        """``(Delta_R^eps b_sigma^{i,j})(q^beta z)``."""
        if eps == 0:
            return self.bpm(i, j + 1, sigma, beta) + self.bpm(i, j, sigma, beta)
        return self.bpm(i, j + 1, sigma, beta + eps) + neg(self.bpm(i, j, sigma, beta))

    def ratio_a(self, i, L, Mlist, alpha, beta):
        return [FieldTerm("ratio", self.osc.a(i), F(1), F(beta), 0, tuple(map(F, L)), tuple(map(F, Mlist)), F(alpha))]


def neg(terms):
    return [t.scaled(-1) for t in terms]


def total(*groups):
    out = []
    for g in groups:
        out.extend(g)
    return out


class Currents:
    """All compiled currents for one (params, coefficient table)."""

    def __init__(self, osc: Oscillators, c_overrides=None):
        self.osc = osc
        self.params = p = osc.params
        self.M, self.N = p.M, p.N
        self.k = p.k
        self.g = p.g
        self.f = Fields(osc)
        self.tables = coefficient_tables(p, c_overrides)
        self._cache: dict = {}

    def _check(self, i):
        if not 1 <= i <= self.M + self.N - 1:
            raise BadIndices(f"node {i}")

    def _spec(self, terms, label):
        return VertexSpec(self.osc, terms, label=label)

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # -- Psi -----------------------------------------------------------
    def psi_terms(self, i, s):
        """Exponent of ``Psi_s^i(q^{s k/2} z)``."""
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        h = F(k, 2)
        out = f.apm(i, s, s * F(g, 2))
        if i < M:
            for l in range(1, i + 1):
                out += f.dr(-s, s, l, i, s * (h + l))
            for l in range(i + 1, M + 1):
                out += neg(f.dl(-s, s, i, l, s * (h + l)))
            for l in range(M + 1, M + N + 1):
                out += neg(f.dl(-s, s, i, l, s * (h + 2 * M + 1 - l)))
        elif i == M:
            for l in range(1, M):
                out += neg(f.dr(0, s, l, M, s * (h + l)))
            for l in range(M + 2, M + N + 1):
                out += f.dl(0, s, M, l, s * (h + 2 * M + 1 - l))
        else:
            for l in range(1, M + 1):
                out += neg(f.dr(s, s, l, i, s * (h + l - 1)))
            for l in range(M + 1, i + 1):
                out += neg(f.dr(s, s, l, i, s * (h + 2 * M - l)))
            for l in range(i + 1, M + N + 1):
                out += f.dl(s, s, i, l, s * (h + 2 * M - l))
        return out

    def psi(self, i, s) -> CurrentSpec:
        """``Psi_s^i(q^{s k/2} z) = sum_{n >= 0} Psi_{s,n} z^{-s n}`` as a current."""
        self._check(i)

        def build():
            spec = self._spec(self.psi_terms(i, s), f"Psi{'+' if s > 0 else '-'}{i}")
            return CurrentSpec(spec.label, [(self.params.one(), 0, spec)], 0, {"node": i, "sign": s})

        return self._cached(("psi", i, s), build)

    def h_zero(self, i) -> ZeroModeOp:
        """``H^i``: the zero-mode content of ``Psi_+^i`` divided by ``log q``."""
        spec = self.psi(i, 1).terms[0][2]
        return ZeroModeOp(self.osc, spec.nu, f"H{i}")

    def h_mode(self, i, m) -> LinearMode:
        """``H_m^i`` read off from the exponent of ``Psi_{sign m}^i``."""
        if m == 0:
            raise ValueError("use h_zero for the Cartan zero mode")
        p = self.params
        spec = self.psi(i, 1 if m > 0 else -1).terms[0][2]
        qq = p.q - 1 / p.q
        coeffs = {}
        for x in spec.oscillators():
            a = spec.alpha(x, m)
            if a != 0:
                coeffs[x] = a / qq if m > 0 else -a / qq
        return LinearMode(self.osc, coeffs, m, f"H{i}[{m}]")

    # -- X^+ -----------------------------------------------------------
    def E_pm(self, i, j, s):
        f, M = self.f, self.M
        out = []
        if i <= M - 1:
            out += f.bc(j, i, j - 1)
            out += f.bpm(j, i + 1, s, j - 1)
            out += neg(f.bc(j, i + 1, j - 1 + s))
            for l in range(1, j):
                out += f.dr(-1, 1, l, i, l)
        else:
            out += f.bc(j, i, 2 * M + 1 - j)
            out += neg(f.bpm(j, i + 1, s, 2 * M + 1 - j))
            out += neg(f.bc(j, i + 1, 2 * M + 1 - s - j))
            for l in range(1, M + 1):
                out += neg(f.dr(1, 1, l, i, l - 1))
            for l in range(M + 1, j):
                out += neg(f.dr(1, 1, l, i, 2 * M - l))
        return out

    def E_single(self, i, j):
        f, M = self.f, self.M
        out = []
        if i == M:
            out += f.bc(j, M, j - 1)
            out += f.b(j, M + 1, j - 1)
            for l in range(1, j):
                out += neg(f.dr(0, 1, l, M, l))
        else:
            out += f.bpm(j, i, 1, j - 1)
            out += neg(f.b(j, i, j))
            out += f.b(j, i + 1, j - 1)
            for l in range(1, j):
                out += neg(f.dr(1, 1, l, i, l - 1))
        return out

    # -- X^- -----------------------------------------------------------
    def F1_pm(self, i, j, s):
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        out = f.apm(i, -1, -F(k + g, 2))
        if i <= M - 1:
            out += f.bc(j, i + 1, -k - j)
            out += neg(f.bpm(j, i, s, -k - j))
            out += neg(f.bc(j, i, -k - j - s))
            for l in range(j + 1, i + 1):
                out += f.dr(1, -1, l, i, -k - l)
            for l in range(i + 1, M + 1):
                out += neg(f.dl(1, -1, i, l, -k - l))
            for l in range(M + 1, M + N + 1):
                out += neg(f.dl(1, -1, i, l, -k - 2 * M - 1 + l))
        elif i == M:
            out += neg(f.bpm(j, M, s, -k - j))
            out += neg(f.bc(j, M, -k - j - s))
            out += neg(f.bpm(j, M + 1, -1, -k - j))
            out += neg(f.b(j, M + 1, -k - j + 1))
            for l in range(j + 1, M):
                out += neg(f.dr(0, -1, l, M, -k - l))
            for l in range(M + 2, M + N + 1):
                out += f.dl(0, -1, M, l, -k - 2 * M - 1 + l)
        else:
            out += f.bc(j, i + 1, -k - 2 * M + j)
            out += f.bpm(j, i, s, -k - 2 * M + j)
            out += neg(f.bc(j, i, -k - 2 * M + s + j))
            for l in range(j + 1, i + 1):
                out += neg(f.dr(-1, -1, l, i, -k - 2 * M + l))
            for l in range(i + 1, M + N + 1):
                out += f.dl(-1, -1, i, l, -k - 2 * M + l)
        return out

    def F1_single(self, i, j):
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        out = f.apm(i, -1, -F(k + g, 2))
        out += neg(f.bpm(j, i + 1, -1, -k - j))
        out += neg(f.b(j, i + 1, -k - j + 1))
        out += f.b(j, i, -k - j)
        for l in range(j + 1, M + 1):
            out += neg(f.dr(-1, -1, l, i, -k - l + 1))
        for l in range(M + 1, i + 1):
            out += neg(f.dr(-1, -1, l, i, -k - 2 * M + l))
        for l in range(i + 1, M + N + 1):
            out += f.dl(-1, -1, i, l, -k - 2 * M + l)
        return out

    def F2_pm(self, i, s):
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        out = f.apm(i, s, s * F(k + g, 2))
        if i <= M - 1:
            out += f.bpm(i, i + 1, s, s * (k + i + 1))
            out += f.bc(i, i + 1, s * (k + i))
            for l in range(i + 2, M + 1):
                out += neg(f.dl(-s, s, i, l, s * (k + l)))
            for l in range(M + 1, M + N + 1):
                out += neg(f.dl(-s, s, i, l, s * (k + 2 * M + 1 - l)))
        elif i == M:
            out += neg(f.b(M, M + 1, s * (k + M - 1)))
            for l in range(M + 2, M + N + 1):
                out += f.dl(0, s, M, l, s * (k + 2 * M + 1 - l))
        else:
            out += neg(f.bpm(i, i + 1, s, s * (k + 2 * M - 1 - i)))
            out += f.bc(i, i + 1, s * (k + 2 * M - i))
            for l in range(i + 2, M + N + 1):
                out += f.dl(s, s, i, l, s * (k + 2 * M - l))
        return out

    def F3_pm(self, i, j, s):
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        out = f.apm(i, 1, F(k + g, 2))
        if i <= M - 1:
            out += f.bc(i, j, k + j - 1)
            out += f.bpm(i + 1, j, s, k + j - 1)
            out += neg(f.bc(i + 1, j, k - 1 + s + j))
            for l in range(j, M + 1):
                out += neg(f.dl(-1, 1, i, l, k + l))
            for l in range(M + 1, M + N + 1):
                out += neg(f.dl(-1, 1, i, l, k + 2 * M + 1 - l))
        elif i == M:
            out += neg(f.b(M, j, k + 2 * M - j))
            out += neg(f.bpm(M + 1, j, s, k + 2 * M + 1 - j))
            out += neg(f.bc(M + 1, j, k + 2 * M + 1 - s - j))
            out += f.bpm(M + 1, j, 1, k + 2 * M + 1 - j)
            for l in range(j + 1, M + N + 1):
                out += f.dl(0, 1, M, l, k + 2 * M + 1 - l)
        else:
            out += f.bc(i, j, k + 2 * M + 1 - j)
            out += neg(f.bpm(i + 1, j, s, k + 2 * M + 1 - j))
            out += neg(f.bc(i + 1, j, k + 2 * M + 1 - s - j))
            for l in range(j + 1, M + N + 1):
                out += f.dl(1, 1, i, l, k + 2 * M - l)
        return out

    def F3_single(self, i, j):
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        out = f.apm(i, 1, F(k + g, 2))
        out += neg(f.b(i, j, k + 2 * M - j))
        out += neg(f.bpm(i + 1, j, 1, k + 2 * M - j))
        out += f.b(i + 1, j, k + 2 * M + 1 - j)
        for l in range(j + 1, M + N + 1):
            out += neg(f.dl(-1, 1, i, l, k + 2 * M + 1 - l))
        return out

    # -- assembled currents --------------------------------------------
    def _pair_terms(self, weight, plus_terms, minus_terms, label):
        """``weight/((q - q^-1) z) * (V_plus - V_minus)``."""
        p = self.params
        w = weight / (p.q - 1 / p.q)
        return [
            (w, -1, self._spec(plus_terms, label + "+")),
            (-w, -1, self._spec(minus_terms, label + "-")),
        ]

    def x(self, i, sign) -> CurrentSpec:
        """``X^{sign,i}(z) = sum_m X_m z^{-m-1}``."""
        self._check(i)
        return self._cached(("x", i, sign), lambda: self._build_x(i, sign))

    def _build_x(self, i, sign):
        M, N = self.M, self.N
        T = self.tables
        terms = []
        struct = []
        if sign > 0:
            if i <= M - 1:
                for j in range(1, i + 1):
                    terms += self._pair_terms(T.c[(i, j)], self.E_pm(i, j, 1), self.E_pm(i, j, -1), f"E{i}{j}")
                    struct.append(("pair", f"E{i},{j}"))
            elif i == M:
                for j in range(1, M + 1):
                    terms.append((T.c[(M, j)], 0, self._spec(self.E_single(M, j), f"E{M}{j}")))
                    struct.append(("single", f"E{M},{j}"))
            else:
                for j in range(1, M + 1):
                    terms.append((T.c[(i, j)], 0, self._spec(self.E_single(i, j), f"E{i}{j}")))
                    struct.append(("single", f"E{i},{j}"))
                for j in range(M + 1, i + 1):
                    terms += self._pair_terms(T.c[(i, j)], self.E_pm(i, j, 1), self.E_pm(i, j, -1), f"E{i}{j}")
                    struct.append(("pair", f"E{i},{j}"))
        else:
            # the F-differences are written (F^- - F^+)
            if i <= M - 1:
                for j in range(1, i):
                    terms += self._pair_terms(T.d1[(i, j)], self.F1_pm(i, j, -1), self.F1_pm(i, j, 1), f"F1{i}{j}")
                    struct.append(("pair", f"F1{i},{j}"))
                terms += self._pair_terms(T.d2[(i, i)], self.F2_pm(i, -1), self.F2_pm(i, 1), f"F2{i}")
                struct.append(("pair", f"F2{i},{i}"))
                for j in range(i + 2, M + 1):
                    terms += self._pair_terms(T.d3[(i, j)], self.F3_pm(i, j, -1), self.F3_pm(i, j, 1), f"F3{i}{j}")
                    struct.append(("pair", f"F3{i},{j}"))
                for j in range(M + 1, M + N + 1):
                    terms.append((T.d3[(i, j)], 0, self._spec(self.F3_single(i, j), f"F3{i}{j}")))
                    struct.append(("single", f"F3{i},{j}"))
            elif i == M:
                for j in range(1, M):
                    terms += self._pair_terms(T.d1[(M, j)], self.F1_pm(M, j, -1), self.F1_pm(M, j, 1), f"F1{M}{j}")
                    struct.append(("pair", f"F1{M},{j}"))
                terms += self._pair_terms(T.d2[(M, M)], self.F2_pm(M, -1), self.F2_pm(M, 1), f"F2{M}")
                struct.append(("pair", f"F2{M},{M}"))
                for j in range(M + 2, M + N + 1):
                    terms += self._pair_terms(T.d3[(M, j)], self.F3_pm(M, j, -1), self.F3_pm(M, j, 1), f"F3{M}{j}")
                    struct.append(("pair", f"F3{M},{j}"))
            else:
                for j in range(1, M + 1):
                    terms.append((T.d1[(i, j)], 0, self._spec(self.F1_single(i, j), f"F1{i}{j}")))
                    struct.append(("single", f"F1{i},{j}"))
                for j in range(M + 1, i):
                    terms += self._pair_terms(T.d1[(i, j)], self.F1_pm(i, j, -1), self.F1_pm(i, j, 1), f"F1{i}{j}")
                    struct.append(("pair", f"F1{i},{j}"))
                terms += self._pair_terms(T.d2[(i, i)], self.F2_pm(i, -1), self.F2_pm(i, 1), f"F2{i}")
                struct.append(("pair", f"F2{i},{i}"))
                for j in range(i + 2, M + N + 1):
                    terms += self._pair_terms(T.d3[(i, j)], self.F3_pm(i, j, -1), self.F3_pm(i, j, 1), f"F3{i}{j}")
                    struct.append(("pair", f"F3{i},{j}"))
        name = f"X{'+' if sign > 0 else '-'}{i}"
        return CurrentSpec(name, terms, 1 if i == M else 0, {"node": i, "sign": sign, "structure": struct})

    # -- screening -----------------------------------------------------
    def S_pm(self, i, j, s):
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        out = neg(f.ratio_a(i, [1], [k + g], F(k + g, 2), 0))
        if j <= M:
            out += f.bc(i + 1, j, M - N - j)
            out += neg(f.bpm(i, j, s, M - N - j))
            out += neg(f.bc(i, j, M - N - j - s))
            for l in range(j + 1, M + 1):
                out += f.dl(1, -1, i, l, M - N - l)
            for l in range(M + 1, M + N + 1):
                out += f.dl(1, -1, i, l, -M - N + l - 1)
        else:
            out += f.bc(i + 1, j, -M - N + j)
            out += f.bpm(i, j, s, -M - N + j)
            out += neg(f.bc(i, j, -M - N + j + s))
            for l in range(j + 1, M + N + 1):
                out += neg(f.dl(-1, -1, i, l, -M - N + l))
        return out

    def S_single(self, i, j):
        f, M, N, k, g = self.f, self.M, self.N, self.k, self.g
        out = neg(f.ratio_a(i, [1], [k + g], F(k + g, 2), 0))
        if i <= M - 1:
            out += f.b(i, j, -M - N + j)
            out += f.bpm(i + 1, j, 1, -M - N + j)
            out += neg(f.b(i + 1, j, -M - N + j + 1))
            for l in range(j + 1, M + N + 1):
                out += f.dl(1, -1, i, l, -M - N - 1 + l)
        else:
            out += f.bc(M + 1, j, -M - N + j)
            out += f.b(M, j, -M - N + j)
            for l in range(j + 1, M + N + 1):
                out += neg(f.dl(0, -1, M, l, -M - N - 1 + l))
        return out

    def screening(self, i) -> CurrentSpec:
        """``S_i(w)`` as a current in w."""
        self._check(i)
        self.params.check_noncritical()
        return self._cached(("S", i), lambda: self._build_s(i))

    def _build_s(self, i):
        M, N = self.M, self.N
        e = self.tables.e
        terms, struct = [], []
        if i <= M - 1:
            for j in range(i + 1, M + 1):
                terms += self._pair_terms(e[(i, j)], self.S_pm(i, j, -1), self.S_pm(i, j, 1), f"S{i}{j}")
                struct.append(("pair", f"S{i},{j}"))
            for j in range(M + 1, M + N + 1):
                terms.append((e[(i, j)], 0, self._spec(self.S_single(i, j), f"S{i}{j}")))
                struct.append(("single", f"S{i},{j}"))
        elif i == M:
            for j in range(M + 1, M + N + 1):
                terms.append((e[(M, j)], 0, self._spec(self.S_single(M, j), f"S{M}{j}")))
                struct.append(("single", f"S{M},{j}"))
        else:
            for j in range(i + 1, M + N + 1):
                terms += self._pair_terms(e[(i, j)], self.S_pm(i, j, -1), self.S_pm(i, j, 1), f"S{i}{j}")
                struct.append(("pair", f"S{i},{j}"))
        return CurrentSpec(f"S{i}", terms, 1 if i == M else 0, {"node": i, "structure": struct})


def build_psi(i, sign, currents: Currents) -> CurrentSpec:
    return currents.psi(i, sign)


def build_x(i, sign, currents: Currents) -> CurrentSpec:
    return currents.x(i, sign)


def build_screening_current(i, currents: Currents) -> CurrentSpec:
    if currents.params.k + currents.params.g == 0:
        raise CriticalLevel("k = -g")
    return currents.screening(i)
