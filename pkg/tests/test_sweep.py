import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robineig.oracle import closed_form_oracle
from robineig.solver import solve_principal
from robineig.sweep import (
    THREADS_ENV,
    SweepCurve,
    SweepError,
    boundary_layer_deviation,
    check_boundary_layer_rescaling,
    check_derivative_formula,
    check_limits,
    check_monotone_concave,
    log_derivative,
    log_grid,
    max_workers,
    second_divided_differences,
    sweep,
)
from robineig.verify import VerificationError

from conftest import powerlaw_spec


@pytest.fixture(scope="module")
def wide_curve(oracle_spec):
    return sweep(oracle_spec, log_grid(0.01, 100.0, 9))


def test_sweep_matches_oracle(wide_curve):
    ref = np.array([closed_form_oracle(b).lambda1 for b in wide_curve.betas])
    assert np.max(np.abs(wide_curve.lambdas / ref - 1)) < 1e-7
    assert wide_curve.neumann_lambda == pytest.approx(math.pi**2 / 4, rel=1e-7)
    assert wide_curve.dirichlet_lambda == pytest.approx(math.pi**2, rel=1e-7)
    assert np.all(np.diff(wide_curve.rstars) > 0)
    assert wide_curve.trace_constant == pytest.approx(2.0, rel=1e-6)


def test_curve_checks(wide_curve):
    assert check_monotone_concave(wide_curve).passed
    assert check_limits(wide_curve).passed
    d = check_derivative_formula(wide_curve)
    assert d.passed and d.constants["formula_positive"] and d.constants["formula_decreasing"]


def test_two_point_curve(oracle_spec):
    c = sweep(oracle_spec, [0.5, 1.0], endpoints=False)
    chk = check_monotone_concave(c)
    assert chk.passed and "vacuous" in chk.note


def test_single_point_matches_direct_solve(oracle_spec, oracle_sol):
    c = sweep(oracle_spec, [1.0], endpoints=False)
    assert c.lambdas[0] == oracle_sol.lambda1


def test_fine_derivative(oracle_spec):
    c = sweep(oracle_spec, [0.98, 0.99, 1.0, 1.01, 1.02], endpoints=False)
    chk = check_derivative_formula(c)
    assert chk.passed and chk.constants["evaluated_points"] == 3
    assert c.derivative_numeric[2] == pytest.approx(1.345962617, rel=1e-4)


def test_limits_need_wide_sweep(oracle_spec):
    c = sweep(oracle_spec, [0.5, 1.0, 2.0])
    with pytest.raises(VerificationError):
        check_limits(c)


def test_sequential_equals_parallel(oracle_spec):
    betas = [0.1, 1.0, 10.0]
    a = sweep(oracle_spec, betas, workers=1, endpoints=False)
    b = sweep(oracle_spec, betas, workers=3, endpoints=False)
    assert np.array_equal(a.lambdas, b.lambdas) and np.array_equal(a.phi1s, b.phi1s)


@pytest.mark.parametrize("betas", [[1.0, 0.5], [0.0, 1.0], [], [1.0, 1.0]])
def test_sweep_input_errors(oracle_spec, betas):
    with pytest.raises(ValueError):
        sweep(oracle_spec, betas)


def test_failure_names_beta():
    spec = powerlaw_spec(3, 2.0, 1.5)
    with pytest.raises(SweepError, match="beta = 2"):
        sweep(spec, [2.0], endpoints=False)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "2")
    assert max_workers(10) == 2
    assert max_workers(1) == 1
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ValueError):
        max_workers(3)
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ValueError):
        max_workers(3)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_log_derivative_exact_for_quadratics_in_log(a, b, c):
    betas = np.geomspace(0.1, 10, 7)
    x = np.log(betas)
    deriv, _ = log_derivative(betas, a + b * x + c * x**2)
    expected = (b + 2 * c * x) / betas
    assert np.allclose(deriv[1:-1], expected[1:-1], atol=1e-9)
    assert math.isnan(deriv[0]) and math.isnan(deriv[-1])


def test_second_differences_of_parabola():
    x = np.array([0.0, 1.0, 3.0, 4.0])
    assert second_divided_differences(x, -(x**2)) == pytest.approx([-2.0, -2.0])


def test_log_grid():
    g = log_grid(0.01, 100.0, 25, True)
    assert len(g) == 25 and g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(100.0)
    assert log_grid(1.0, 3.0, 3, False) == pytest.approx([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        log_grid(0.0, 1.0, 3)


def test_csv_roundtrip(tmp_path, wide_curve):
    path = tmp_path / "curve.csv"
    wide_curve.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert "beta,lambda1,phi1,rstar,dlambda_numeric,dlambda_formula" in lines
    back = SweepCurve.from_csv(path)
    assert np.array_equal(back.lambdas, wide_curve.lambdas)
    assert back.dirichlet_lambda == wide_curve.dirichlet_lambda
    assert check_limits(back).passed


def test_boundary_layer_shrinks(oracle_spec):
    s10 = solve_principal(oracle_spec.with_beta(10.0))
    s100 = solve_principal(oracle_spec.with_beta(100.0))
    chk = check_boundary_layer_rescaling(s100, 0.01, reference=s10)
    assert chk.passed and chk.constants["shrink_factor"] > 1
    assert boundary_layer_deviation(s100, 1e-8) < 1e-10
    with pytest.raises(VerificationError):
        check_boundary_layer_rescaling(solve_principal(oracle_spec))
