from fractions import Fraction

import pytest

from qwakimoto.classical import (
    ClassicalFock,
    Readings,
    auto_selectors,
    check_classical_affine_relations,
    check_classical_ope,
    check_classical_screening,
    kappa_table,
    limit_compare,
    read_kappa,
    richardson,
    select_readings,
)


@pytest.fixture(scope="module")
def f21():
    return ClassicalFock(2, 1, 1)


def test_kappa_table_32():
    assert kappa_table(3, 2, 1) == {1: 2, 2: 3, 3: 3, 4: 3}


def test_kappa_read_off_32():
    f = ClassicalFock(3, 2, 1)
    assert [read_kappa(f, i) for i in range(1, 5)] == [2, 3, 3, 3]


def test_default_readings():
    assert Readings().as_dict() == {
        "psi_sign": "flipped",
        "xminus_tail": "gamma_i_i+1",
        "gamma_dagger": "gamma",
        "psi_order": "swapped",
    }


def test_affine_relations_21(f21):
    rep = check_classical_affine_relations(f21, D=1, W=1)
    assert rep.status == "ExactPass", rep.witness
    assert rep.cells == 288


def test_readings_12_pinned():
    good = sorted(k for k, v in select_readings(ClassicalFock(1, 2, 2)).items() if v.status == "ExactPass")
    assert good == [("flipped", "display", "gamma", "swapped"), ("flipped", "gamma_i_i+1", "gamma", "swapped")]


@pytest.mark.slow
def test_tail_reading_matters_13():
    f = ClassicalFock(1, 3, 1)
    assert check_classical_affine_relations(f, D=1, W=1, readings=Readings(xminus_tail="display")).status == "Fail"
    assert check_classical_affine_relations(f, D=1, W=1).status == "ExactPass"


def test_ope_measured_constants(f21):
    rep = check_classical_ope(f21, D=1, W=1)
    # the mode identities hold with the measured constants
    assert rep.cells == 224
    assert rep.status == "Fail"
    assert rep.witness == {
        "beta12,gamma12": {"display": "1/1", "measured": "-1/1"},
        "betahat12,gamma12": {"display": "-1/1", "measured": "1/1"},
    }


def test_screening_commutes(f21):
    assert check_classical_screening(f21, D=1, W=1).status == "ExactPass"


def test_richardson_removes_geometric_error():
    vals = [3 + 5 / 2**j - 7 / 4**j for j in range(3, 7)]
    assert richardson(vals) == pytest.approx(3, abs=1e-12)
    assert richardson([Fraction(1)]) == 1


def test_limit_compare_subset():
    sel = auto_selectors(2, 1, 1, D=1, modes=(0,))
    assert len(sel) == 30
    rows = limit_compare(sel, 2, 1, 1)
    assert all(r["passed"] for r in rows)
    assert max(r["rel_error"] for r in rows) < 1e-3
