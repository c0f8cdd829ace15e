import pytest

from qwakimoto import DeformationParams
from qwakimoto.relations import RELATION_IDS, Harness, InvalidId, check_highest_weight, check_relation, fmt

FAST = ["HH", "H_X", "XX_quadratic", "XX_commuting", "X_plus_minus_delta", "Serre_cubic", "Psi_consistency"]


@pytest.fixture(scope="module")
def h21():
    return Harness(DeformationParams(2, 1), D=1, W=1)


@pytest.mark.parametrize("rid", FAST)
def test_relations_21_small(h21, rid):
    rep = check_relation(rid, h21)
    assert rep.status == "ExactPass", rep.witness
    assert rep.cells > 0


@pytest.mark.parametrize("rid", ["HH", "H_X", "XX_quadratic", "X_plus_minus_delta", "Serre_cubic"])
def test_relations_12(rid):
    rep = check_relation(rid, Harness(DeformationParams(1, 2, 2), D=1, W=1))
    assert rep.status == "ExactPass", rep.witness


def test_frozen_cell_counts(h21):
    counts = {rid: check_relation(rid, h21).cells for rid in ("HH", "H_X", "X_plus_minus_delta")}
    assert counts == {"HH": 16, "H_X": 72, "X_plus_minus_delta": 36}


def test_printed_delta_convention_fails(h21):
    rep = check_relation("X_plus_minus_delta", h21, delta_convention="printed")
    assert rep.status == "Fail"
    assert rep.witness["lhs"] == "1/1" and rep.witness["rhs"] == "1/4"


def test_quartic_needs_two_by_two(h21):
    rep = check_relation("Serre_quartic", h21)
    assert rep.status == "Skipped"


def test_unknown_id(h21):
    with pytest.raises(InvalidId):
        check_relation("nope", h21)
    assert "HighestWeight" in RELATION_IDS


def test_highest_weight():
    rep = check_highest_weight([1, 0], DeformationParams(2, 1), D=1, W=1)
    assert rep.status == "ExactPass"
    assert rep.extra["eigenvalues"] == {"H1": "1", "H2": "0"}
    assert check_highest_weight([0, 0, 0], DeformationParams(2, 2)).status == "Skipped"


def test_report_dict(h21):
    d = check_relation("HH", h21).as_dict()
    assert d["id"] == "HH" and d["status"] == "ExactPass"
    assert fmt(3) == "3/1"
