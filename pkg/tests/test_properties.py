from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from qwakimoto import DeformationParams, FloatParams, Oscillators
from qwakimoto.classical import richardson

P = DeformationParams(2, 1)
ints = st.integers(-12, 12)


@given(ints, ints)
def test_qpow_is_a_homomorphism(a, b):
    x, y = Fraction(a, 4), Fraction(b, 4)
    assert P.qpow(x) * P.qpow(y) == P.qpow(x + y)


@given(ints)
def test_qint_odd_and_recursive(n):
    assert P.qint(-n) == -P.qint(n)
    # [n+1] = [2][n] - [n-1]
    assert P.qint(n + 1) == P.qint(2) * P.qint(n) - P.qint(n - 1)


@given(st.integers(-6, 6))
def test_float_twin_agrees(n):
    f = FloatParams(2, 1, 1, float(P.q))
    assert abs(f.qint(n) - float(P.qint(n))) <= 1e-9 * max(1.0, abs(float(P.qint(n))))


osc = Oscillators(DeformationParams(2, 2))
ferm = sorted(osc.fermionic)
charges = st.lists(st.integers(-2, 2), min_size=len(ferm), max_size=len(ferm))


@given(charges, st.sampled_from(ferm))
def test_cocycle_sign_is_a_sign(vals, y):
    ch = osc.charge_from(p_b={})
    ch = osc.shift_charge(ch, {x: Fraction(v) for x, v in zip(ferm, vals)})
    assert osc.cocycle_sign({y: 1}, ch) in (1, -1)


@given(charges, st.sampled_from(ferm), st.sampled_from(ferm))
def test_fermionic_factors_anticommute(vals, x, y):
    if x == y:
        return
    ch = osc.shift_charge(osc.vacuum_charge(), {u: Fraction(v) for u, v in zip(ferm, vals)})
    xy = osc.cocycle_sign({y: 1}, ch) * osc.cocycle_sign({x: 1}, osc.shift_charge(ch, {y: Fraction(1)}))
    yx = osc.cocycle_sign({x: 1}, ch) * osc.cocycle_sign({y: 1}, osc.shift_charge(ch, {x: Fraction(1)}))
    assert xy == -yx


@settings(max_examples=50)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_richardson_exact_on_two_term_tails(L, a, b):
    vals = [L + a / 2**j + b / 4**j for j in range(3, 7)]
    assert abs(richardson(vals) - L) < 1e-9
