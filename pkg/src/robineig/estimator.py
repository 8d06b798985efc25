"""scikit-learn style wrapper around the shooting solver.

``fit`` solves the eigenproblem for the configured parameters; ``transform``
maps radii to (phi, phi') columns and ``predict`` to phi alone.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .model import ProblemSpec
from .ode import resample
from .solver import BoundaryKind, SolverConfig, solve
from .weights import RadialWeight, parse_weight


def check_radii(X, r_max: float | None = None) -> np.ndarray:
    """Validate radii given as a 1-d sequence or an (n, 1) array."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr = check_array(arr, dtype=float, ensure_2d=True)
    if arr.shape[1] != 1:
        raise ValueError(f"expected a single column of radii, got shape {arr.shape}")
    r = arr[:, 0]
    if np.any(r < 1.0):
        raise ValueError("radii must be >= 1 (the exterior of the unit ball)")
    if r_max is not None and np.any(r > r_max):
        raise ValueError(f"radii beyond the integrated range (r_max = {r_max:g})")
    return r


def _as_weight(weight) -> RadialWeight:
    if isinstance(weight, RadialWeight):
        return weight
    if isinstance(weight, str):
        return parse_weight(weight)
    raise TypeError(f"weight must be a RadialWeight or a weight string, got {type(weight).__name__}")


class RobinEigensolver(TransformerMixin, BaseEstimator):
    """Principal eigenpair of the weighted radial Robin problem.

    Parameters mirror :class:`ProblemSpec` and :class:`SolverConfig`; ``r_max``
    is the largest truncation radius, with the schedule (r_max/4, r_max/2, r_max).
    """

    def __init__(self, dim=3, p=2.0, beta=1.0, weight="powerlaw:c0=1,l=4", boundary="robin",
                 r_max=400.0, lambda_tol=1e-8, ode_tol=1e-10):
        self.dim = dim
        self.p = p
        self.beta = beta
        self.weight = weight
        self.boundary = boundary
        self.r_max = r_max
        self.lambda_tol = lambda_tol
        self.ode_tol = ode_tol

    def _spec(self) -> ProblemSpec:
        return ProblemSpec(int(self.dim), float(self.p), float(self.beta), _as_weight(self.weight))

    def _config(self) -> SolverConfig:
        return SolverConfig.geometric(float(self.r_max) / 4.0, 3, lambda_tol=self.lambda_tol, ode_tol=self.ode_tol)

    def fit(self, X=None, y=None):
        """Solve the eigenproblem; ``X`` and ``y`` are ignored."""
        sol = solve(self._spec(), BoundaryKind(self.boundary), self._config())
        self.solution_ = sol
        self.lambda1_ = sol.lambda1
        self.r_star_ = sol.r_star
        self.phi_at_1_ = sol.phi_at_1
        return self

    def transform(self, X):
        """Columns (phi(r), phi'(r)) at the radii in ``X``."""
        check_is_fitted(self, "solution_")
        r = check_radii(X, self.solution_.R_max_used)
        phi, dphi = resample(self.solution_.trajectory, r)
        return np.column_stack((phi, dphi))

    def predict(self, X):
        return self.transform(X)[:, 0]
