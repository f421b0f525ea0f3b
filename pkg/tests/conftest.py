import numpy as np
import pytest

from bochnerlab.fixtures import get_manifold
from bochnerlab.structure import build_structure
from bochnerlab.verification import default_scenarios, run_suite


@pytest.fixture(scope="session")
def default_report():
    """One shared run of the default suite; several tests read it."""
    return run_suite(default_scenarios(), seed=0)


@pytest.fixture(scope="session")
def t2():
    return get_manifold("T2-flat")


@pytest.fixture(scope="session")
def s2():
    return get_manifold("S2-round")


def make_ps(man, p_spec, k_spec, kind="analytic"):
    return build_structure(man, man.backend(kind), p_spec, k_spec)


@pytest.fixture(scope="session")
def t2_grid(t2):
    return t2.sample_grid(12)


@pytest.fixture(scope="session")
def s2_grid(s2):
    return s2.sample_grid(10)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
