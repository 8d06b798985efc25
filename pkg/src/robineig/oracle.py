"""Closed-form eigenpair for N = 3, p = 2, g(r) = r^-4.

With s = 1/r the radial equation becomes psi'' + lam psi = 0 on (0, 1]
with psi(0) = 0, so phi(r) = A sin(k/r), lam = k^2, and the Robin
condition at r = 1 reads k cos k + beta sin k = 0.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

ORACLE_DIM = 3
ORACLE_P = 2.0
ORACLE_C0 = 1.0
ORACLE_L = 4.0


class OracleValues(NamedTuple):
    lambda1: float
    r_star: float
    phi_at_1: float
    dlambda_dbeta: float


def oracle_root(beta: float) -> float:
    """Smallest root of k cos k + beta sin k = 0 in (pi/2, pi] by bisection."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return math.pi / 2
    if math.isinf(beta):
        return math.pi

    def f(k):
        return k * math.cos(k) + beta * math.sin(k)

    lo, hi = math.pi / 2, math.pi
    # f(pi/2) = beta > 0, f(pi) = -pi < 0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def oracle_amplitude(k: float) -> float:
    """A with 4 pi A^2 int_0^1 sin^2(k s) ds = 1."""
    return (4.0 * math.pi * (0.5 - math.sin(2 * k) / (4 * k))) ** -0.5


def closed_form_oracle(beta: float) -> OracleValues:
    k = oracle_root(beta)
    amp = oracle_amplitude(k)
    dk = -math.sin(k) / (math.cos(k) - k * math.sin(k) + beta * math.cos(k))
    return OracleValues(k * k, 2.0 * k / math.pi, amp * math.sin(k), 2.0 * k * dk)


def oracle_profile(beta: float, r):
    """(phi, phi') of the normalized closed-form eigenfunction."""
    k = oracle_root(beta)
    amp = oracle_amplitude(k)
    r = np.asarray(r, dtype=float)
    return amp * np.sin(k / r), -amp * k / r**2 * np.cos(k / r)


def oracle_dirichlet() -> OracleValues:
    return OracleValues(math.pi**2, 2.0, 0.0, 0.0)
