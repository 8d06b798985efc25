import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robineig.model import ProblemSpec
from robineig.ode import (
    IntegrationError,
    flux_to_slope,
    integrate,
    node_quadrature,
    resample,
    slope_to_flux,
)
from robineig.oracle import closed_form_oracle, oracle_profile
from robineig.weights import RadialWeight

W4 = RadialWeight.power_law(1.0, 4.0)


# magnitudes below ~1e-50 underflow in |phi'|^(p-1) for the larger p
SLOPES = st.one_of(st.just(0.0), st.floats(1e-50, 1e3), st.floats(-1e3, -1e-50))


@given(SLOPES, st.floats(1, 100), st.integers(2, 6), st.floats(1.1, 4))
def test_flux_slope_roundtrip(slope, r, dim, p):
    back = flux_to_slope(slope_to_flux(slope, r, dim, p), r, dim, p)
    assert back == pytest.approx(slope, rel=1e-9, abs=1e-300)


def test_zero_eigenvalue_has_closed_form():
    # lam = 0 keeps the flux constant: phi = phi1 + beta phi1 (1 - 1/r) for N = 3, p = 2
    spec = ProblemSpec(3, 2.0, 0.5, W4)
    traj = integrate(spec, 0.0, 1.0, 50.0)
    exact = 1.0 + 0.5 * (1.0 - 1.0 / traj.r)
    assert np.max(np.abs(traj.phi - exact)) < 1e-9
    assert np.allclose(traj.flux, 0.5)


def test_p3_zero_eigenvalue_slope():
    # p = 3, N = 5: phi' = (F / r^4)^{1/2} with F = beta phi1^2
    spec = ProblemSpec(5, 3.0, 4.0, RadialWeight.power_law(1.0, 6.0))
    traj = integrate(spec, 0.0, 1.0, 10.0)
    assert traj.dphi == pytest.approx(np.sqrt(4.0 / traj.r**4), rel=1e-12)


def test_oracle_trajectory_matches_closed_form():
    v = closed_form_oracle(1.0)
    spec = ProblemSpec(3, 2.0, 1.0, W4)
    traj = integrate(spec, v.lambda1, v.phi_at_1, 100.0, stop_at_zero=False)
    phi, dphi = oracle_profile(1.0, traj.r)
    assert np.max(np.abs(traj.phi - phi)) < 1e-8
    assert np.max(np.abs(traj.dphi - dphi)) < 1e-8
    assert traj.events.f_zero_rstar == pytest.approx(v.r_star, abs=1e-8)
    assert traj.events.f_sign_changes == 1
    assert traj.stats.accepted > 0


def test_dense_resample_accuracy():
    v = closed_form_oracle(1.0)
    traj = integrate(ProblemSpec(3, 2.0, 1.0, W4), v.lambda1, v.phi_at_1, 100.0, stop_at_zero=False)
    mid = 0.5 * (traj.r[1:] + traj.r[:-1])
    phi, dphi = resample(traj, mid)
    ephi, edphi = oracle_profile(1.0, mid)
    assert np.max(np.abs(phi - ephi)) < 1e-6
    assert np.max(np.abs(dphi - edphi)) < 1e-6
    knots, _ = resample(traj, traj.r)
    assert np.array_equal(knots, traj.phi)
    with pytest.raises(ValueError):
        resample(traj, [0.5])


def test_overshoot_stops_at_zero():
    spec = ProblemSpec(3, 2.0, 1.0, W4)
    traj = integrate(spec, 9.0, 1.0, 100.0)
    assert traj.stopped_at_zero
    # phi ~ sin(3/r + c) changes sign; the zero is a terminal node
    assert traj.r_end == pytest.approx(traj.events.first_phi_zero)
    assert abs(traj.phi[-1]) < 1e-9


def test_scaling_homogeneity():
    spec = ProblemSpec(5, 3.0, 1.0, RadialWeight.power_law(1.0, 6.0))
    t1 = integrate(spec, 5.0, 1.0, 50.0, stop_at_zero=False)
    t2 = t1.scaled(2.0)
    assert np.allclose(t2.phi, 2 * t1.phi)
    assert np.allclose(t2.flux, 4 * t1.flux)
    direct = integrate(spec, 5.0, 2.0, 50.0, stop_at_zero=False)
    assert resample(direct, [10.0])[0][0] == pytest.approx(2 * resample(t1, [10.0])[0][0], rel=1e-8)


def test_boundary_step_cap():
    traj = integrate(ProblemSpec(3, 2.0, 1.0, W4), 4.0, 1.0, 10.0, h_boundary=1e-3)
    near = traj.r[traj.r < 1.1]
    assert np.max(np.diff(near)) <= 1e-3 * (1 + 1e-9)


def test_node_quadrature_exact_for_polynomial():
    traj = integrate(ProblemSpec(3, 2.0, 1.0, W4), 0.0, 1.0, 20.0)
    val = node_quadrature(traj, lambda r, phi, dphi: r**3)
    assert val == pytest.approx((20.0**4 - 1) / 4, rel=1e-12)


@pytest.mark.parametrize("kwargs", [dict(lam=-1.0), dict(r_max=1.0), dict(tol=0.0)])
def test_integrate_rejects_bad_input(kwargs):
    args = dict(lam=1.0, phi1=1.0, r_max=10.0, tol=1e-10) | kwargs
    with pytest.raises(ValueError):
        integrate(ProblemSpec(3, 2.0, 1.0, W4), **args)


def test_integration_error_carries_radius():
    err = IntegrationError("step size underflow", 2.5)
    assert err.radius == 2.5 and "2.5" in str(err)
