import pytest

from selfsim import make_spec


@pytest.fixture(scope="session")
def ge():
    """p = 2, f = x^2 + 1: non-torsion, has the dihedral witness."""
    return make_spec(2, [1, 0])


@pytest.fixture(scope="session")
def grig():
    """p = 2, f = x^2 + x + 1: torsion, no dihedral witness."""
    return make_spec(2, [1, 1])


@pytest.fixture(scope="session")
def fg():
    """p = 3, f = x - 1."""
    return make_spec(3, [2])


@pytest.fixture(scope="session")
def dih():
    """p = 2, f = x + 1: the degenerate infinite dihedral action."""
    return make_spec(2, [1])
