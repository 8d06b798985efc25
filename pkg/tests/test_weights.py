import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robineig.model import ParameterError, sphere_area
from robineig.weights import (
    RadialWeight,
    WeightError,
    WeightKind,
    check_admissible,
    diagnostics,
    lebesgue_norm,
    level_radius,
    lorentz_quasinorm,
    parse_weight,
    rearrangement,
    weighted_moment,
)


def powerlaw_quasinorm(dim, p, l, c0=1.0):
    """sup_t t^a (1 + c t)^{-b} with a = p/N, b = l/N, c = N/omega."""
    a, b, c = p / dim, l / dim, dim / sphere_area(dim)
    if b < a:
        return math.inf
    if b == a:
        return c0 * c ** (-a)
    t = a / (c * (b - a))
    return c0 * t**a * (1 + c * t) ** (-b)


def test_power_law_evaluation():
    w = RadialWeight.power_law(2.0, 3.0)
    assert w(2.0) == pytest.approx(0.25)
    assert isinstance(w(2.0), float)
    assert w(np.array([1.0, 2.0])) == pytest.approx([2.0, 0.25])
    assert w.kind is WeightKind.POWER_LAW and w.is_nonincreasing()


def test_parse_weight_powerlaw():
    w = parse_weight("powerlaw:c0=1.5,l=4")
    assert w.amplitude == 1.5 and w.decay_rate == 4.0


@pytest.mark.parametrize("text", ["foo", "powerlaw:c0=1", "powerlaw:c0=-1,l=4", "powerlaw:c0=1,l=4,x=2",
                                  "table:", "powerlaw:c0=a,l=4"])
def test_parse_weight_rejects(text):
    with pytest.raises(WeightError):
        parse_weight(text)


def _write(tmp_path, text):
    path = tmp_path / "w.csv"
    path.write_text(text)
    return path


def test_csv_table_roundtrip(tmp_path):
    r = np.geomspace(1.0, 1e3, 40)
    body = "\n".join(f"{float(x)!r},{float(x) ** -4.0!r}" for x in r)
    path = _write(tmp_path, "r,g\n" + body + "\n")
    w = parse_weight(f"table:{path}")
    assert w.kind is WeightKind.TABULATED
    assert w.decay_rate == pytest.approx(4.0, rel=1e-9)
    probe = np.geomspace(1.0, 1e5, 30)
    assert w(probe) == pytest.approx(probe**-4.0, rel=1e-9)


@pytest.mark.parametrize("text,line", [
    ("r,g\n1.0,1.0\n0.9,0.5\n", 3),
    ("r,g\n1.0,1.0\n2.0,-0.5\n", 3),
    ("r,g\n1.5,1.0\n2.0,0.5\n", 2),
    ("x,y\n1.0,1.0\n2.0,0.5\n", 1),
    ("r,g\n1.0,1.0\n2.0,abc\n", 3),
])
def test_csv_table_diagnostics(tmp_path, text, line):
    path = _write(tmp_path, text)
    with pytest.raises(WeightError, match=f"{path.name}:{line}"):
        RadialWeight.from_csv(path)


def test_level_radius_matches_shell_volume():
    dim = 3
    rho = level_radius(2.0, dim)
    assert sphere_area(dim) * (rho**dim - 1) / dim == pytest.approx(2.0)


def test_rearrangement_of_power_law():
    w = RadialWeight.power_law(1.0, 4.0)
    t = np.array([0.0, 1.0, 10.0])
    expected = level_radius(t, 3) ** -4.0
    assert rearrangement(w, 3, t) == pytest.approx(expected)


@pytest.mark.parametrize("dim,p,l", [(3, 2.0, 4.0), (4, 2.0, 5.0), (5, 3.0, 6.0), (3, 1.5, 4.0), (3, 2.0, 2.5)])
def test_quasinorm_against_closed_form(dim, p, l):
    assert lorentz_quasinorm(RadialWeight.power_law(1.0, l), dim, p) == pytest.approx(
        powerlaw_quasinorm(dim, p, l), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 6), st.floats(1.2, 2.8), st.floats(0.1, 3.0), st.floats(0.1, 10))
def test_quasinorm_property(dim, p, extra, c0):
    l = p + extra
    qn = lorentz_quasinorm(RadialWeight.power_law(c0, l), dim, p)
    assert qn == pytest.approx(powerlaw_quasinorm(dim, p, l, c0), rel=1e-8)


def test_quasinorm_infinite_for_slow_decay():
    assert lorentz_quasinorm(RadialWeight.power_law(1.0, 1.5), 3, 2.0) == math.inf


def test_moment_and_norms():
    w = RadialWeight.power_law(1.0, 4.0)
    assert weighted_moment(w, 3) == pytest.approx(1.0, rel=1e-10)
    assert weighted_moment(RadialWeight.power_law(1.0, 3.0), 3) == math.inf
    # ||r^-4||_{L^{3/2}} = (omega / (6 - 3))^{2/3}
    assert lebesgue_norm(w, 3, 2.0) == pytest.approx((4 * math.pi / 3) ** (2 / 3), rel=1e-9)


def test_diagnostics_flags():
    d = diagnostics(RadialWeight.power_law(1.0, 4.0), 3, 2.0)
    assert d.admissible_classA and d.admissible_finite_moment
    assert d.cg_constant == pytest.approx((4 * math.pi) ** -0.5)
    d2 = diagnostics(RadialWeight.power_law(1.0, 2.5), 3, 2.0)
    assert d2.admissible_classA and not d2.admissible_finite_moment
    d3 = diagnostics(RadialWeight.power_law(1.0, 2.0), 3, 2.0)
    assert not d3.admissible_classA
    assert set(d.to_dict()) >= {"lorentz_quasinorm", "moment_Ig", "admissible_classA"}


def test_check_admissible_raises():
    with pytest.raises(ParameterError):
        check_admissible(RadialWeight.power_law(1.0, 1.5), 3, 2.0)
