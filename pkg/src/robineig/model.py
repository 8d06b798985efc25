"""Problem definition and the closed-form scalar maps used by the estimates.

Everything here is a pure function of its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .weights import RadialWeight


class ParameterError(ValueError):
    """Raised when problem parameters violate 1 < p < N, beta >= 0, etc."""


def check_exponents(dim: int, p: float) -> None:
    if int(dim) != dim or dim < 2:
        raise ParameterError(f"dimension must be an integer >= 2, got {dim}")
    if not p > 1:
        raise ParameterError(f"exponent p must exceed 1, got {p}")
    if not p < dim:
        raise ParameterError(f"exponent p must be below the dimension (p={p}, N={dim})")


@dataclass(frozen=True)
class ProblemSpec:
    """One instance of the weighted Robin eigenvalue problem on the exterior
    of the unit ball.  ``beta = 0`` encodes the Neumann endpoint."""

    dim: int
    p: float
    beta: float
    weight: "RadialWeight"

    def __post_init__(self):
        check_exponents(self.dim, self.p)
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ParameterError(f"Robin parameter must be finite and >= 0, got {self.beta}")

    def with_beta(self, beta: float) -> "ProblemSpec":
        return ProblemSpec(self.dim, self.p, beta, self.weight)

    @property
    def value_exponent(self) -> float:
        return decay_exponents(self.dim, self.p)[0]

    @property
    def gradient_exponent(self) -> float:
        return decay_exponents(self.dim, self.p)[1]


@dataclass(frozen=True)
class EnvelopeParams:
    gamma: float
    delta: float
    length_scale: float
    r_star: float

    def __post_init__(self):
        if not self.gamma >= 2:
            raise ParameterError(f"gamma must be >= 2, got {self.gamma}")
        if not self.delta > 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if not self.length_scale > 0:
            raise ParameterError(f"length scale must be positive, got {self.length_scale}")
        if not self.r_star > 1:
            raise ParameterError(f"critical radius must exceed 1, got {self.r_star}")


def robin_slope(beta: float, p: float) -> float:
    """Boundary slope ratio phi'(1)/phi(1) = beta**(1/(p-1))."""
    if not p > 1:
        raise ParameterError(f"exponent p must exceed 1, got {p}")
    if beta == 0:
        return 0.0
    return beta ** (1.0 / (p - 1.0))


def decay_exponents(dim: int, p: float) -> tuple[float, float]:
    """Far-field exponents of the eigenfunction and of its gradient."""
    check_exponents(dim, p)
    return (dim - p) / (p - 1.0), (dim - 1.0) / (p - 1.0)


def char_length(beta: float, dim: int) -> float:
    if not beta > 0:
        raise ParameterError(f"characteristic length needs beta > 0, got {beta}")
    return beta ** (-1.0 / (dim - 1.0))


def transition_tau(r, params: EnvelopeParams):
    """tau(r) = 1 / (1 + (r/L)**gamma); accepts scalars or arrays."""
    return 1.0 / (1.0 + (r / params.length_scale) ** params.gamma)


def modulation_sigma(r, r_star: float, delta: float, p: float):
    dist = abs(r - r_star)
    return (dist / (dist + delta)) ** (1.0 / (p - 1.0))


def log_factor_h(r, dim: int, p: float):
    """h(r) = max(1, (log r)^{(N-p)/(N(p-1))})."""
    r = np.asarray(r, dtype=float)
    expo = (dim - p) / (dim * (p - 1.0))
    out = np.maximum(1.0, np.log(np.maximum(r, 1.0)) ** expo)
    return float(out) if out.ndim == 0 else out


def K_beta(beta: float, dim: int, p: float) -> float:
    """Growth bound factor: phi(r) <= phi(1) * K_beta for all r >= 1."""
    check_exponents(dim, p)
    return 1.0 + (p - 1.0) / (dim - p) * robin_slope(beta, p)


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^dim."""
    if dim < 2:
        raise ParameterError(f"dimension must be >= 2, got {dim}")
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
