import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robineig.model import (
    EnvelopeParams,
    K_beta,
    ParameterError,
    ProblemSpec,
    char_length,
    check_exponents,
    decay_exponents,
    log_factor_h,
    modulation_sigma,
    robin_slope,
    sphere_area,
    transition_tau,
)
from robineig.weights import RadialWeight


@pytest.mark.parametrize("dim,p", [(3, 3.0), (3, 4.0), (2, 1.0), (1, 0.5), (3, 0.9)])
def test_exponent_guard_rejects(dim, p):
    with pytest.raises(ParameterError):
        check_exponents(dim, p)


def test_problem_spec_validation():
    w = RadialWeight.power_law(1.0, 4.0)
    with pytest.raises(ParameterError):
        ProblemSpec(3, 2.0, -0.1, w)
    with pytest.raises(ParameterError):
        ProblemSpec(3, 2.0, math.inf, w)
    spec = ProblemSpec(3, 2.0, 1.0, w)
    assert spec.with_beta(2.0).beta == 2.0
    assert spec.value_exponent == 1.0 and spec.gradient_exponent == 2.0


def test_robin_slope_values():
    assert robin_slope(4.0, 2.0) == 4.0
    assert robin_slope(4.0, 3.0) == pytest.approx(2.0)
    assert robin_slope(0.0, 1.5) == 0.0


@pytest.mark.parametrize("dim,p,expected", [(3, 2.0, (1.0, 2.0)), (4, 2.0, (2.0, 3.0)), (5, 3.0, (1.0, 2.0)),
                                            (3, 1.5, (3.0, 4.0))])
def test_decay_exponents(dim, p, expected):
    assert decay_exponents(dim, p) == pytest.approx(expected)


def test_sphere_area_known_values():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)
    assert sphere_area(5) == pytest.approx(8 * math.pi**2 / 3)


def test_k_beta_and_length():
    assert K_beta(1.0, 3, 2.0) == pytest.approx(2.0)
    assert K_beta(0.0, 4, 3.0) == 1.0
    assert char_length(1.0, 3) == 1.0
    assert char_length(4.0, 3) == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        char_length(0.0, 3)


def test_envelope_params_validation():
    with pytest.raises(ParameterError):
        EnvelopeParams(1.5, 0.1, 1.0, 1.3)
    with pytest.raises(ParameterError):
        EnvelopeParams(2.0, 0.0, 1.0, 1.3)
    with pytest.raises(ParameterError):
        EnvelopeParams(2.0, 0.1, 1.0, 1.0)


@given(st.floats(0, 1e6), st.floats(2, 6), st.floats(0.01, 10))
def test_transition_tau_in_unit_interval(t, gamma, L):
    tau = transition_tau(t, EnvelopeParams(gamma, 0.1, L, 1.5))
    assert 0 < tau <= 1


def test_transition_tau_endpoints():
    params = EnvelopeParams(2.0, 0.1, 1.0, 1.5)
    assert transition_tau(0.0, params) == 1.0
    assert transition_tau(1.0, params) == 0.5


@given(st.floats(1, 1e4), st.floats(1.01, 5), st.floats(1e-3, 1), st.floats(1.05, 4))
def test_modulation_sigma_bounds(r, rs, delta, p):
    s = modulation_sigma(r, rs, delta, p)
    assert 0 <= s < 1


def test_modulation_sigma_vanishes_at_rstar():
    assert modulation_sigma(1.3, 1.3, 0.1, 2.0) == 0.0


@given(st.floats(1, 1e12), st.integers(3, 8))
def test_log_factor_at_least_one(r, dim):
    assert log_factor_h(r, dim, 2.0) >= 1.0


def test_log_factor_vectorized():
    out = log_factor_h(np.array([1.0, math.e, math.e**8]), 3, 2.0)
    assert out == pytest.approx([1.0, 1.0, 2.0])
