import pytest

from qwakimoto import CriticalLevel, Currents, DeformationParams, Oscillators
from qwakimoto.screening import commutator_profile, telescoping_test


@pytest.fixture(scope="module")
def c21():
    return Currents(Oscillators(DeformationParams(2, 1)))


@pytest.mark.parametrize(
    "gen,i,nterms",
    [(("X", 1, 1), 1, 2), (("X", 1, -1), 1, 4), (("X", 2, -1), 1, 6), (("X", 2, -1), 2, 2), (("X", 1, 1), 2, 0)],
)
def test_profiles_telescope(c21, gen, i, nterms):
    prof = commutator_profile(i, gen, c21)
    assert len(prof.terms) == nterms
    rep = telescoping_test(prof, D=1, currents=c21)
    assert rep.status == "ExactPass", rep.witness


@pytest.mark.parametrize("gen", [("H", 1, 0), ("H", 2, 1), ("Psi", 1, 1)])
def test_cartan_profiles_empty(c21, gen):
    for i in (1, 2):
        assert commutator_profile(i, gen, c21).is_empty()


@pytest.mark.parametrize("idx", [0, 1, 2, 3])
def test_mutation_detected(c21, idx):
    prof = commutator_profile(1, ("X", 1, -1), c21).mutated(idx)
    assert telescoping_test(prof, D=1, currents=c21).status == "Fail"


def test_critical_level():
    C = Currents(Oscillators(DeformationParams(1, 2, 1)))
    with pytest.raises(CriticalLevel):
        commutator_profile(1, ("X", 1, 1), C)
