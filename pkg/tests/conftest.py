import numpy as np
import pytest

from kspap.domain import BoxDomain
from kspap.duhamel import ConstantsLedger


@pytest.fixture(scope="session")
def box():
    return BoxDomain.cube(2, np.pi, 32)


@pytest.fixture(scope="session")
def small_box():
    return BoxDomain.cube(2, np.pi, 8)


@pytest.fixture(scope="session")
def ledger():
    # typical fitted values at N = 32, p = 3.5, gamma = 0
    return ConstantsLedger(lambda1=1.0, n=2, p=3.5, gamma=0.0, k1=0.35, k2=0.62, C=0.39)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
