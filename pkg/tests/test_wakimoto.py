import pytest

from qwakimoto import Currents, DeformationParams, Oscillators
from qwakimoto.wakimoto import (
    BadPair,
    build_xi_eta,
    check_current_commutation_up_to_sign,
    check_projector,
    check_xi_eta_decomposition,
    exact_rank,
    plus_pairs,
)


@pytest.fixture(scope="module")
def c21():
    return Currents(Oscillators(DeformationParams(2, 1)))


def test_plus_pairs():
    assert plus_pairs(DeformationParams(2, 1)) == [(1, 2)]
    assert plus_pairs(DeformationParams(1, 3)) == [(2, 3), (2, 4), (3, 4)]


def test_bad_pair(c21):
    with pytest.raises(BadPair):
        build_xi_eta(c21.osc, 1, 3)


def test_exact_rank():
    assert exact_rank([{0: 1, 1: 2}, {0: 2, 1: 4}, {2: 1}]) == 2
    assert exact_rank([]) == 0


def test_decomposition_ranks(c21):
    rep = check_xi_eta_decomposition(c21.osc, D=2)
    assert rep.status == "ExactPass"
    got = {k: (v["dim"], v["rank_eta_xi"], v["rank_xi_eta"], v["dim_ker_eta"]) for k, v in rep.extra["ranks"].items()}
    assert got == {"1,2|d=0": (1, 1, 0, 1), "1,2|d=1": (8, 7, 1, 7), "1,2|d=2": (44, 36, 8, 36)}


def test_decomposition_needs_restricted_sector(c21):
    osc = c21.osc
    assert check_xi_eta_decomposition(osc, sector=osc.charge_from(p_c={(1, 2): 1}), D=1).status == "Skipped"


@pytest.mark.parametrize(
    "cur,sign",
    [(("X", 1, 1), 1), (("X", 1, -1), 1), (("X", 2, 1), -1), (("X", 2, -1), -1), (("Psi", 1, 1), 1), (("Psi", 2, -1), 1)],
)
def test_eta_commutes_up_to_parity_sign(c21, cur, sign):
    rep = check_current_commutation_up_to_sign(c21, (1, 2), cur, D=1, W=1, ops=("eta0",))
    assert rep.status == "ExactPass"
    assert rep.extra["measured_sign"]["eta0"] == sign == rep.extra["parity_prediction"]


def test_eta_without_klein_factor_fails(c21):
    rep = check_current_commutation_up_to_sign(c21, (1, 2), ("X", 1, -1), D=1, W=1, ops=("eta0",), klein=False)
    assert rep.status == "Fail"


@pytest.mark.parametrize("cur", [("X", 1, 1), ("X", 2, -1), ("Psi", 1, 1)])
def test_xi_commutes_where_no_pole(c21, cur):
    assert check_current_commutation_up_to_sign(c21, (1, 2), cur, D=1, W=1, ops=("xi0",)).status == "ExactPass"


def test_xi_witness_against_x_minus_1(c21):
    rep = check_current_commutation_up_to_sign(c21, (1, 2), ("X", 1, -1), D=1, W=1, ops=("xi0",))
    assert rep.status == "Fail"
    w = rep.witness
    assert (w["mode"], w["in"], w["out"], w["lhs"], w["rhs"]) == ("X-1[0]", "1|0>", "a1[-1]|b12=-1>", "0/1", "-1/16")


def test_projector(c21):
    rep = check_projector(c21, D=1, W=1)
    assert rep.status == "ExactPass"
    assert rep.extra["blocks"][1] == {"trace": "7/1", "rank": 7, "dim": 8}
