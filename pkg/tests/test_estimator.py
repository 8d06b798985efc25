import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from robineig.estimator import RobinEigensolver, check_radii
from robineig.oracle import closed_form_oracle, oracle_profile
from robineig.weights import RadialWeight


@pytest.fixture(scope="module")
def fitted():
    return RobinEigensolver().fit()


def test_params_roundtrip():
    est = RobinEigensolver(dim=4, p=2.0, beta=0.5, weight="powerlaw:c0=1,l=5")
    params = est.get_params()
    assert params["dim"] == 4 and params["weight"] == "powerlaw:c0=1,l=5"
    other = clone(est).set_params(beta=2.0)
    assert other.beta == 2.0 and est.beta == 0.5


def test_fit_transform(fitted):
    v = closed_form_oracle(1.0)
    assert fitted.lambda1_ == pytest.approx(v.lambda1, rel=1e-7)
    assert fitted.r_star_ == pytest.approx(v.r_star, abs=1e-7)
    r = np.array([1.0, 2.0, 10.0])
    out = fitted.transform(r)
    assert out.shape == (3, 2)
    phi, dphi = oracle_profile(1.0, r)
    assert out[:, 0] == pytest.approx(phi, rel=1e-6)
    assert out[:, 1] == pytest.approx(dphi, rel=1e-5)
    assert fitted.predict(r.reshape(-1, 1)) == pytest.approx(out[:, 0])


def test_weight_object_accepted():
    est = RobinEigensolver(weight=RadialWeight.power_law(1.0, 4.0), boundary="neumann").fit()
    assert est.lambda1_ == pytest.approx(np.pi**2 / 4, rel=1e-7)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        RobinEigensolver().transform([1.0])


def test_check_radii():
    assert check_radii([1.0, 2.0]).shape == (2,)
    with pytest.raises(ValueError):
        check_radii([0.5])
    with pytest.raises(ValueError):
        check_radii(np.ones((3, 2)))
    with pytest.raises(ValueError):
        check_radii([np.nan])
    with pytest.raises(ValueError):
        check_radii([500.0], r_max=400.0)
