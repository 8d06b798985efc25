import math

import numpy as np
import pytest

from robineig.model import ParameterError, ProblemSpec
from robineig.ode import integrate
from robineig.oracle import closed_form_oracle
from robineig.solver import (
    BoundaryKind,
    BracketError,
    Shot,
    SolverConfig,
    classify_shot,
    extrapolate,
    gradient_energy,
    normalize,
    robin_slope_residual,
    shot_margin,
    solve,
    solve_principal,
    weighted_mass,
)
from robineig.weights import RadialWeight

from conftest import powerlaw_spec


def test_oracle_eigenpair(oracle_sol):
    v = closed_form_oracle(1.0)
    assert oracle_sol.lambda1 == pytest.approx(v.lambda1, rel=1e-7)
    assert oracle_sol.r_star == pytest.approx(v.r_star, abs=1e-7)
    assert oracle_sol.phi_at_1 == pytest.approx(v.phi_at_1, rel=1e-6)
    assert oracle_sol.boundary_kind is BoundaryKind.ROBIN
    assert oracle_sol.bracket[0] < oracle_sol.bracket[1]
    assert oracle_sol.normalization_residual < 1e-10


@pytest.mark.parametrize("beta", [0.01, 100.0])
def test_oracle_extreme_betas(beta):
    sol = solve_principal(powerlaw_spec(3, 2.0, 4.0, beta))
    assert sol.lambda1 == pytest.approx(closed_form_oracle(beta).lambda1, rel=1e-7)


def test_endpoints(neumann_sol, dirichlet_sol):
    assert neumann_sol.lambda1 == pytest.approx(math.pi**2 / 4, rel=1e-7)
    assert neumann_sol.r_star == 1.0
    assert dirichlet_sol.lambda1 == pytest.approx(math.pi**2, rel=1e-7)
    assert dirichlet_sol.phi_at_1 == 0.0
    assert dirichlet_sol.r_star == pytest.approx(2.0, abs=1e-7)


def test_truncated_values_decrease(oracle_sol):
    lams = oracle_sol.truncated_lambdas
    assert len(lams) == 3 and lams[0] >= lams[1] >= lams[2]
    assert oracle_sol.extrapolation_order == pytest.approx(3.0, abs=0.3)


def test_classification_on_either_side():
    spec = powerlaw_spec(3, 2.0, 4.0)
    lam = closed_form_oracle(1.0).lambda1
    over = integrate(spec, lam * 1.01, 1.0, 400.0)
    under = integrate(spec, lam * 0.99, 1.0, 400.0)
    assert classify_shot(over, 3, 2.0) is Shot.OVERSHOOT
    assert classify_shot(under, 3, 2.0) is Shot.UNDERSHOOT
    assert shot_margin(over, 3, 2.0, 1.0) > 0 > shot_margin(under, 3, 2.0, 1.0)


def test_extrapolate_geometric_sequence():
    limit = 2.0
    vals = [limit + 0.5**(3 * k) for k in range(3)]
    est, order = extrapolate(vals, 2.0)
    assert est == pytest.approx(limit, abs=1e-14)
    assert order == pytest.approx(3.0)
    est, order = extrapolate([1.0, 2.0, 1.5])
    assert est == 1.5 and math.isnan(order)


def test_normalization_and_identities(p3_sol):
    spec = p3_sol.spec
    assert weighted_mass(p3_sol.trajectory, spec) == pytest.approx(1.0, abs=1e-12)
    rescaled, residual = normalize(p3_sol.trajectory.scaled(3.0), spec)
    assert residual < 1e-12
    assert np.allclose(rescaled.phi, p3_sol.trajectory.phi, rtol=1e-12)
    energy = gradient_energy(p3_sol.trajectory, spec)
    assert energy + spec.beta * (8 * math.pi**2 / 3) * p3_sol.phi_at_1**3 == pytest.approx(p3_sol.lambda1, rel=1e-6)
    assert robin_slope_residual(p3_sol) < 1e-8


def test_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(lambda_tol=0.0)
    with pytest.raises(ParameterError):
        SolverConfig(r_max_schedule=(200.0, 100.0))
    assert SolverConfig.geometric(50.0, 3).r_max_schedule == (50.0, 100.0, 200.0)


def test_robin_solve_needs_positive_beta():
    with pytest.raises(ParameterError):
        solve_principal(powerlaw_spec(3, 2.0, 4.0, 0.0))
    assert solve(powerlaw_spec(3, 2.0, 4.0, 0.0)).boundary_kind is BoundaryKind.NEUMANN


def test_inadmissible_weight_rejected():
    with pytest.raises(ParameterError):
        solve_principal(powerlaw_spec(3, 2.0, 1.5))


def test_bracket_ceiling():
    spec = ProblemSpec(3, 2.0, 1.0, RadialWeight.power_law(1e-6, 4.0))
    with pytest.raises(BracketError):
        solve_principal(spec, SolverConfig(lambda_ceiling=1e3))


def test_amplitude_scaling_of_weight():
    # lambda scales inversely with the weight amplitude
    base = solve_principal(powerlaw_spec(4, 2.0, 5.0)).lambda1
    spec = ProblemSpec(4, 2.0, 1.0, RadialWeight.power_law(2.0, 5.0))
    assert solve_principal(spec).lambda1 == pytest.approx(base / 2, rel=1e-7)
