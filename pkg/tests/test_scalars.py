from fractions import Fraction

import pytest

from qwakimoto import CriticalLevel, DeformationParams, FloatParams, NonRepresentableExponent
from qwakimoto.scalars import to_fraction


def test_default_point():
    p = DeformationParams(2, 1)
    assert p.e == 4
    assert p.q == Fraction(1, 16)
    assert p.g == 1 and p.rank == 2


def test_qint_values():
    p = DeformationParams(2, 1)
    assert p.qint(2) == Fraction(257, 16)
    assert p.qint(0) == 0
    assert p.qint(-3) == -p.qint(3)
    assert p.qint(1) == 1


def test_qpow_lattice():
    p = DeformationParams(2, 1)
    assert p.qpow(Fraction(1, 4)) == Fraction(1, 2)
    assert p.qpow(-1) == 16
    with pytest.raises(NonRepresentableExponent):
        p.qpow(Fraction(1, 8))


def test_granularity_must_match_level():
    with pytest.raises(NonRepresentableExponent):
        DeformationParams(2, 1, Fraction(1, 3), e=4)
    assert DeformationParams(2, 1, Fraction(1, 3)).e % 6 == 0


def test_cartan_and_grading():
    p = DeformationParams(2, 1)
    assert p.cartan == [[2, -1], [-1, 0]]
    assert [p.nu(i) for i in (1, 2, 3)] == [1, 1, -1]
    q = DeformationParams(1, 2)
    assert q.cartan == [[0, 1], [1, -2]]


def test_critical_level():
    p = DeformationParams(1, 2, 1)
    with pytest.raises(CriticalLevel):
        p.check_noncritical()
    DeformationParams(1, 2, 2).check_noncritical()


def test_float_twin():
    f = FloatParams(2, 1, 1, 0.5)
    assert f.qint(2) == pytest.approx(2.5)
    assert f.A(1, 2) == -1


def test_to_fraction():
    assert to_fraction("3/4") == Fraction(3, 4)
    assert to_fraction(2) == 2
