from fractions import Fraction
from itertools import permutations

import pytest

from qwakimoto import DeformationParams, Oscillators, SingularCartan, enumerate_basis, highest_weight_state
from qwakimoto.heisenberg import BadIndices, basis_upto


def partition_counts(n_osc, D):
    """Coefficients of prod_{m>=1} (1 - x^m)^(-n_osc) up to x^D."""
    c = [1] + [0] * D
    for m in range(1, D + 1):
        for _ in range(n_osc):
            for d in range(m, D + 1):
                c[d] += c[d - m]
    return c


@pytest.mark.parametrize("MN", [(2, 1), (1, 2), (2, 2)])
def test_basis_counts_match_partitions(MN):
    osc = Oscillators(DeformationParams(*MN))
    oracle = partition_counts(osc.size, 4)
    got = [len(enumerate_basis(osc, osc.vacuum_charge(), d)) for d in range(5)]
    assert got == oracle


def test_frozen_counts_21():
    osc = Oscillators(DeformationParams(2, 1))
    assert osc.size == 8
    assert [len(enumerate_basis(osc, osc.vacuum_charge(), d)) for d in range(5)] == [1, 8, 44, 192, 726]
    assert len(basis_upto(osc, osc.vacuum_charge(), 2)) == 53


def test_metric_values():
    p = DeformationParams(2, 1)
    osc = Oscillators(p)
    b12, b13, c12 = osc.b(1, 2), osc.b(1, 3), osc.c(1, 2)
    # [b_1, b_-1] = -nu nu [1]^2
    assert osc.metric(b12, b12, 1) == -1
    assert osc.metric(b13, b13, 1) == 1
    assert osc.metric(c12, c12, 1) == 1
    assert osc.metric(osc.a(1), osc.a(1), 1) == p.qint(2) * p.qint(2)
    assert osc.metric(osc.a(1), osc.a(2), 1) == -p.qint(2)
    assert osc.zero_metric(osc.a(1), osc.a(1)) == 4


def test_fermionic_zero_modes():
    osc = Oscillators(DeformationParams(2, 1))
    assert osc.fermionic == {osc.b(1, 3), osc.b(2, 3)}


def test_cocycle_triple_orderings_agree():
    osc = Oscillators(DeformationParams(2, 2))
    ferm = sorted(osc.fermionic)
    assert len(ferm) == 4
    ch = osc.charge_from(p_b={(1, 3): 1, (2, 4): 1})
    for trio in [ferm[:3], ferm[1:]]:
        signs = set()
        for order in permutations(trio):
            # apply one factor at a time, rightmost first
            s, c = 1, ch
            for y in reversed(order):
                s *= osc.cocycle_sign({y: 1}, c)
                c = osc.shift_charge(c, {y: Fraction(1)})
            # relative to the canonical product of the same three factors
            seq = list(order)
            par = sum(1 for a in range(3) for b in range(a + 1, 3) if osc.ferm_rank[seq[a]] < osc.ferm_rank[seq[b]])
            signs.add(s * (-1) ** par)
        assert len(signs) == 1


def test_reorder_sign_antisymmetric():
    osc = Oscillators(DeformationParams(2, 1))
    x, y = sorted(osc.fermionic)
    assert osc.reorder_sign({x: 1}, {y: 1}) == -osc.reorder_sign({y: 1}, {x: 1})


def test_charge_interning_and_restriction():
    osc = Oscillators(DeformationParams(2, 1))
    a = osc.charge_from(p_b={(1, 2): 1}, p_c={(1, 2): -1})
    b = osc.charge_from(p_b={(1, 2): 1}, p_c={(1, 2): -1})
    assert a is b
    assert osc.is_restricted(a)
    assert not osc.is_restricted(osc.charge_from(p_c={(1, 2): 1}))


def test_highest_weight_state():
    osc = Oscillators(DeformationParams(2, 1))
    v = highest_weight_state(osc, [1, 0])
    (st,) = v
    assert st[0][osc.a(1)] == 1 and st[1] == ()
    with pytest.raises(SingularCartan):
        highest_weight_state(Oscillators(DeformationParams(2, 2)), [0, 0, 0])


def test_bad_indices():
    osc = Oscillators(DeformationParams(2, 1))
    with pytest.raises(BadIndices):
        osc.b(2, 2)
    with pytest.raises(BadIndices):
        osc.a(3)


def test_describe_state():
    osc = Oscillators(DeformationParams(2, 1))
    st = (osc.charge_from(p_b={(1, 3): -1}), ((osc.c(1, 2), 1),))
    assert osc.describe_state(st) == "c12[-1]|b13=-1>"
