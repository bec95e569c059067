import pytest

from cocyclelab.core import SystemParams
from cocyclelab.potentials import make_builtin


@pytest.fixture(scope="session")
def cos3():
    return make_builtin("cos3")


@pytest.fixture(scope="session")
def zero():
    return make_builtin("constant", c=0.0)


@pytest.fixture
def params():
    return SystemParams(lam=20.0, energy=0.7, b=10)
