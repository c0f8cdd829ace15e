from fractions import Fraction

import pytest

from qwakimoto import Currents, DeformationParams, Oscillators, ZeroCoefficient, coefficient_tables


def frozen(table):
    return {k: Fraction(int(v.numerator), int(v.denominator)) for k, v in table.items()}


def test_tables_21():
    T = coefficient_tables(DeformationParams(2, 1))
    assert frozen(T.d1) == {(2, 1): -1}
    assert frozen(T.d2) == {(1, 1): 1, (2, 2): Fraction(-1, 16)}
    assert frozen(T.d3) == {(1, 3): Fraction(1, 256)}
    assert frozen(T.e) == {(1, 2): 1, (1, 3): Fraction(1, 16), (2, 3): 16}


def test_e_inverts_d2_on_neighbours():
    p = DeformationParams(3, 2)
    T = coefficient_tables(p)
    for i in range(1, p.rank + 1):
        # e_{i,i+1} d^2_{ii} is a power of q up to sign
        v = T.e[(i, i + 1)] * T.d2[(i, i)]
        assert abs(v) in {p.qpow(n) for n in range(-4, 5)}


def test_overrides_and_zero():
    p = DeformationParams(2, 1)
    T = coefficient_tables(p, {(2, 1): 3})
    assert T.d1[(2, 1)] == Fraction(-1, 3)
    with pytest.raises(ZeroCoefficient):
        coefficient_tables(p, {(1, 1): 0})


def test_structure_21():
    C = Currents(Oscillators(DeformationParams(2, 1)))
    shape = {(i, s): (len(C.x(i, s).terms), C.x(i, s).parity) for i in (1, 2) for s in (1, -1)}
    assert shape == {(1, 1): (2, 0), (1, -1): (3, 0), (2, 1): (2, 1), (2, -1): (4, 1)}
    assert len(C.screening(1).terms) == 3
    assert C.screening(2).parity == 1


def test_h_zero_eigenvalue():
    p = DeformationParams(2, 1)
    osc = Oscillators(p)
    C = Currents(osc)
    ch = osc.charge_from(p_a=[2, 1])
    assert C.h_zero(1).eigenvalue(ch) == 2
    assert C.h_zero(2).eigenvalue(ch) == 1


def test_index_range():
    C = Currents(Oscillators(DeformationParams(2, 1)))
    with pytest.raises(ValueError):
        C.x(3, 1)
