import pytest
from fractions import Fraction

from icelab.heights import ModelParams, flat_boundary
from icelab.lattice import build_diamond, build_rectangle
from icelab.oracle import enumerate_heights
from icelab.random_cluster import GraphPair


@pytest.fixture(scope="session")
def diamond1():
    return build_diamond(1)


@pytest.fixture(scope="session")
def diamond2():
    return build_diamond(2)


@pytest.fixture(scope="session")
def diamond2_odd():
    return build_diamond(2, (1, 0))


@pytest.fixture(scope="session")
def rect32():
    return build_rectangle(3, 2)


@pytest.fixture(scope="session")
def pair2(diamond2):
    return GraphPair(diamond2)


@pytest.fixture(scope="session")
def heights2(diamond2):
    return enumerate_heights(diamond2, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2)))
