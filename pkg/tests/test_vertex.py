"""Low-degree blocks of vertex-operator modes against a direct series expansion."""

from fractions import Fraction

import pytest

from qwakimoto import CosetMismatch, Currents, DeformationParams, Oscillators, VertexSpec, current_mode_matrix
from qwakimoto.heisenberg import enumerate_basis
from qwakimoto.vertex import FieldTerm, sector_z_offset


def alpha_oracle(spec, x, n):
    """Coefficient of x_n z^{-n} in the exponent, summed from the raw term data."""
    p = spec.params
    q = p.q
    tot = Fraction(0)
    for t in spec.terms:
        if t.osc != x:
            continue
        if t.kind == "pm":
            if (n > 0) == (t.sigma > 0):
                tot += t.sigma * t.coef * (q - 1 / q) * p.qpow(-t.shift * n)
            continue
        v = -t.coef * p.qpow(-t.shift * n) / p.qint(n)
        if t.kind == "ratio":
            for l in t.L:
                v *= p.qint(l * n)
            for m in t.Mlist:
                v /= p.qint(m * n)
            v *= p.qpow(-t.alpha * abs(n))
        tot += v
    return tot


def series_block(spec, state):
    """``{E: {out: value}}`` for V(z)|state> with |state> of degree <= 1, out degree <= 1."""
    osc = spec.osc
    p = spec.params
    charge, mono = state
    lam = spec.lam
    out_ch = osc.shift_charge(charge, lam)
    gamma = sum((v * charge[x] for x, v in lam.items()), Fraction(0))
    S = spec.prefactor * spec.written_sign * osc.cocycle_sign(lam, charge)
    logq = sum((v * charge[x] for x, v in spec.nu.items()), Fraction(0))
    S *= p.qpow(logq)
    xs = {t.osc for t in spec.terms}
    res = {}

    def put(E, key, v):
        if v:
            d = res.setdefault(E, {})
            d[key] = d.get(key, 0) + v

    if mono == ():
        put(gamma, (out_ch, ()), S)
        for x in xs:
            put(gamma + 1, (out_ch, ((x, 1),)), S * alpha_oracle(spec, x, -1))
    else:
        ((y, lvl),) = mono
        assert lvl == 1
        beta = sum((alpha_oracle(spec, x, 1) * osc.metric(x, y, 1) for x in xs), Fraction(0))
        put(gamma - 1, (out_ch, ()), S * beta)
        put(gamma, (out_ch, ((y, 1),)), S)
        for x in xs:
            put(gamma, (out_ch, ((x, 1),)), S * alpha_oracle(spec, x, -1) * beta)
    return res


def current_series(current, state):
    tot = {}
    for w, s, spec in current.terms:
        for E, vec in series_block(spec, state).items():
            d = tot.setdefault(E + s, {})
            for k, v in vec.items():
                d[k] = d.get(k, 0) + w * v
    return {E: {k: v for k, v in d.items() if v} for E, d in tot.items()}


def states_upto1(osc, charge):
    return enumerate_basis(osc, charge, 0) + enumerate_basis(osc, charge, 1)


def check_current(current, osc, charge):
    ins = states_upto1(osc, charge)
    off = sector_z_offset(current, charge)
    seen = 0
    for st in ins:
        oracle = current_series(current, st)
        for t in range(-3, 4):
            E = off + t
            mat = current_mode_matrix(current, E, [st], out_cap=1)
            got = {k[0]: v for k, v in mat.items() if v}
            assert got == oracle.get(E, {}), (current.name, st, E)
            seen += len(got)
    assert seen


@pytest.fixture(scope="module")
def c21():
    return Currents(Oscillators(DeformationParams(2, 1)))


@pytest.mark.parametrize("i,s", [(1, 1), (1, -1), (2, 1), (2, -1)])
def test_x_modes_vacuum(c21, i, s):
    check_current(c21.x(i, s), c21.osc, c21.osc.vacuum_charge())


@pytest.mark.parametrize("i,s", [(1, 1), (2, -1)])
def test_x_modes_charged_sector(c21, i, s):
    ch = c21.osc.charge_from(p_b={(1, 2): 1, (1, 3): 1}, p_c={(1, 2): -1})
    check_current(c21.x(i, s), c21.osc, ch)


@pytest.mark.parametrize("i,s", [(1, 1), (2, -1)])
def test_psi_modes(c21, i, s):
    check_current(c21.psi(i, s), c21.osc, c21.osc.vacuum_charge())


def test_x_modes_12():
    C = Currents(Oscillators(DeformationParams(1, 2, 2)))
    for i in (1, 2):
        for s in (1, -1):
            check_current(C.x(i, s), C.osc, C.osc.vacuum_charge())


def test_alpha_matches_oracle(c21):
    for _, _, spec in c21.x(1, -1).terms:
        for x in spec.oscillators():
            for n in (-2, -1, 1, 2):
                assert spec.alpha(x, n) == alpha_oracle(spec, x, n)


def test_coset_mismatch():
    osc = Oscillators(DeformationParams(2, 1))
    v = VertexSpec(osc, [FieldTerm("full", osc.a(1), Fraction(1, 2))])
    ch = osc.charge_from(p_a=[1, 0])
    with pytest.raises(CosetMismatch):
        v.transition(ch, 0)


def test_pm_term_only_one_side():
    p = DeformationParams(2, 1)
    t = FieldTerm("pm", 0, Fraction(1), sigma=1)
    assert t.mode_coefficient(-1, p) == 0
    assert t.mode_coefficient(1, p) == p.q - 1 / p.q
