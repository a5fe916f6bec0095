import pytest

from orbsym.expr import exp_, neg, rat
from orbsym.problems import Family, ProblemSpec, T
from orbsym.numverify import OrbitState


@pytest.fixture(scope="session")
def kepler():
    return ProblemSpec(Family.KEPLER)


@pytest.fixture(scope="session")
def kepler_drag():
    return ProblemSpec(Family.KEPLER_DRAG, alpha=0.01)


@pytest.fixture(scope="session")
def power_law_cube():
    return ProblemSpec(Family.POWER_LAW, alpha=-3)


@pytest.fixture(scope="session")
def power_law_quartic():
    return ProblemSpec(Family.POWER_LAW, alpha=-4, mu=0.5)


@pytest.fixture(scope="session")
def cone_drag():
    return ProblemSpec(Family.CONE_DRAG, g=exp_(neg(rat(1, 10) * T)))


@pytest.fixture(scope="session")
def micz_special():
    return ProblemSpec(Family.MICZ, lam=0.5, nu=-0.125)


@pytest.fixture(scope="session")
def micz_general():
    return ProblemSpec(Family.MICZ, lam=0.5, nu=0.1)


@pytest.fixture(scope="session")
def ellipse_state():
    return OrbitState(0.0, 1.0, 0.0, 0.0, 1.2)
