import pytest

from robineig.model import ProblemSpec
from robineig.solver import solve_dirichlet, solve_neumann, solve_principal
from robineig.weights import RadialWeight


def powerlaw_spec(dim, p, l, beta=1.0):
    return ProblemSpec(dim, p, beta, RadialWeight.power_law(1.0, l))


@pytest.fixture(scope="session")
def oracle_spec():
    return powerlaw_spec(3, 2.0, 4.0, 1.0)


@pytest.fixture(scope="session")
def oracle_sol(oracle_spec):
    return solve_principal(oracle_spec)


@pytest.fixture(scope="session")
def neumann_sol(oracle_spec):
    return solve_neumann(oracle_spec)


@pytest.fixture(scope="session")
def dirichlet_sol(oracle_spec):
    return solve_dirichlet(oracle_spec)


@pytest.fixture(scope="session")
def p3_sol():
    return solve_principal(powerlaw_spec(5, 3.0, 6.0, 1.0))
