"""Shared fixtures: the OPO case study and a fast solver configuration.

Steady-state solves converge to the same fixed point for any stable step,
so the tests use a coarser step than the library default; the residual
threshold (1e-10) is what pins the answer.
"""

import numpy as np
import pytest

from lgq import SteadySolveConfig, steady_context, true_steady
from lgq.presets import (
    UNOBSERVED_HETERODYNE,
    UNOBSERVED_HOMODYNE,
    opo_model,
    opo_test_covariances,
)

FAST_CFG = SteadySolveConfig(dt=1e-3, t_max=400.0, tol=1e-10)


@pytest.fixture(scope="session")
def cfg():
    return FAST_CFG


@pytest.fixture(scope="session")
def opo_file():
    return opo_model()


@pytest.fixture(scope="session")
def opo(opo_file):
    return opo_file.model


@pytest.fixture(scope="session")
def alice(opo_file):
    return opo_file.unravelling("alice")


@pytest.fixture(scope="session")
def bob_homodyne(opo_file):
    return opo_file.unravelling(UNOBSERVED_HOMODYNE)


@pytest.fixture(scope="session")
def bob_heterodyne(opo_file):
    return opo_file.unravelling(UNOBSERVED_HETERODYNE)


@pytest.fixture(scope="session")
def fixtures(opo):
    return opo_test_covariances(opo.hbar)


@pytest.fixture(scope="session")
def ctx(opo, alice):
    return steady_context(opo, alice, FAST_CFG)


@pytest.fixture(scope="session")
def V_T_homodyne(opo, alice, bob_homodyne):
    return true_steady(opo, alice, bob_homodyne, FAST_CFG)


@pytest.fixture(scope="session")
def V_T_heterodyne(opo, alice, bob_heterodyne):
    return true_steady(opo, alice, bob_heterodyne, FAST_CFG)


def frobenius(mat) -> float:
    return float(np.linalg.norm(np.asarray(mat)))
