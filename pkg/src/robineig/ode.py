"""Radial Euler-Lagrange ODE in flux form.

The unknowns are the profile phi and the flux F = r^{N-1}|phi'|^{p-2}phi'::

    phi' = sign(F) (|F| / r^{N-1})^{1/(p-1)}
    F'   = -lam r^{N-1} g(r) |phi|^{p-2} phi

Written this way the system stays continuous through phi' = 0 for every
p > 1, which the second-order form does not.  Integration uses an embedded
Dormand-Prince 5(4) pair with its quartic dense output; the dense output is
what the event bisection runs on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .model import ProblemSpec

MAX_RATIO = 1.05
EPS = np.finfo(float).eps

# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# Difference between the 5th- and 4th-order weights (7 stages, FSAL).
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# Dense-output polynomial coefficients (Shampine's quartic interpolant).
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class IntegrationError(RuntimeError):
    """Step-size underflow or a non-finite state during integration."""

    def __init__(self, message: str, radius: float):
        super().__init__(f"{message} at r = {radius:.17g}")
        self.radius = radius


class OdeState(NamedTuple):
    r: float
    phi: float
    flux: float


@dataclass(frozen=True)
class Events:
    first_phi_zero: float | None = None
    f_zero_rstar: float | None = None
    f_sign_changes: int = 0


@dataclass(frozen=True)
class StepStats:
    accepted: int
    rejected: int
    max_error: float


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Immutable record of one radial shot."""

    r: np.ndarray
    phi: np.ndarray
    flux: np.ndarray
    dphi: np.ndarray
    dflux: np.ndarray
    events: Events
    stats: StepStats
    dim: int
    p: float
    lam: float

    @property
    def nodes(self) -> list[OdeState]:
        return [OdeState(*t) for t in zip(self.r.tolist(), self.phi.tolist(), self.flux.tolist())]

    @property
    def r_end(self) -> float:
        return float(self.r[-1])

    @property
    def stopped_at_zero(self) -> bool:
        return self.events.first_phi_zero is not None

    def scaled(self, factor: float) -> "Trajectory":
        """Same shot with phi multiplied by ``factor`` (p-homogeneity)."""
        fp = factor ** (self.p - 1.0)
        return Trajectory(
            self.r, _readonly(self.phi * factor),
            _readonly(self.flux * fp), _readonly(self.dphi * factor),
            _readonly(self.dflux * fp), self.events, self.stats,
            self.dim, self.p, self.lam,
        )


def flux_to_slope(flux, r, dim: int, p: float):
    """phi' recovered from F; continuous at F = 0 for all p > 1."""
    flux = np.asarray(flux, dtype=float)
    mag = (np.abs(flux) / np.asarray(r, dtype=float) ** (dim - 1)) ** (1.0 / (p - 1.0))
    return np.sign(flux) * mag


def slope_to_flux(dphi, r, dim: int, p: float):
    """F = r^{N-1} |phi'|^{p-2} phi', written to stay finite at phi' = 0."""
    dphi = np.asarray(dphi, dtype=float)
    return np.asarray(r, dtype=float) ** (dim - 1) * np.sign(dphi) * np.abs(dphi) ** (p - 1.0)


def vector_field(state: OdeState, lam: float, spec: ProblemSpec) -> tuple[float, float]:
    """(dphi/dr, dF/dr) at ``state``."""
    rhs = _make_rhs(spec, lam)
    return rhs(state.r, state.phi, state.flux)


def _make_rhs(spec: ProblemSpec, lam: float):
    nm1 = spec.dim - 1.0
    q = 1.0 / (spec.p - 1.0)
    pm1 = spec.p - 1.0
    g = spec.weight.scalar
    linear = spec.p == 2.0
    copysign = math.copysign

    def rhs(r, phi, flux):
        rn = r**nm1
        if linear:
            dphi = flux / rn
            src = phi
        else:
            dphi = copysign((abs(flux) / rn) ** q, flux) if flux != 0.0 else 0.0
            src = copysign(abs(phi) ** pm1, phi) if phi != 0.0 else 0.0
        return dphi, -lam * rn * g(r) * src

    return rhs


def _dense(r0, h, y0, f0, k, theta):
    """Dense output at r0 + theta*h from the seven stage slopes ``k``."""
    powers = (theta, theta**2, theta**3, theta**4)
    out = []
    for comp in range(2):
        acc = 0.0
        for j in range(7):
            kj = k[j][comp]
            if kj == 0.0:
                continue
            row = _P[j]
            acc += kj * (row[0] * powers[0] + row[1] * powers[1] + row[2] * powers[2] + row[3] * powers[3])
        out.append(y0[comp] + h * acc)
    return out


def _bisect_event(r0, h, y0, k, comp, sign0):
    """Locate the sign change of component ``comp`` inside the step."""
    lo, hi = 0.0, 1.0
    tol = 10.0 * EPS * max(1.0, abs(r0 + h)) / h
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = _dense(r0, h, y0, None, k, mid)[comp]
        if (v > 0) == (sign0 > 0) and v != 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def integrate(
    spec: ProblemSpec,
    lam: float,
    phi1: float,
    r_max: float,
    tol: float = 1e-10,
    *,
    flux1: float | None = None,
    h_boundary: float | None = None,
    stop_at_zero: bool = True,
) -> Trajectory:
    """Integrate from r = 1 to ``r_max`` or the first zero of phi.

    The initial flux is the Robin value beta*phi1^(p-1) unless ``flux1``
    is given (the Dirichlet shot uses phi1 = 0, flux1 = 1).  When
    ``h_boundary`` is set, steps within distance 0.1 of the boundary are
    capped at that size.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not r_max > 1:
        raise ValueError(f"r_max must exceed 1, got {r_max}")
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    p, dim = spec.p, spec.dim
    if flux1 is None:
        if not phi1 > 0:
            raise ValueError(f"initial value must be positive, got {phi1}")
        flux1 = spec.beta * phi1 ** (p - 1.0)
    rhs = _make_rhs(spec, lam)

    slope1 = float(flux_to_slope(flux1, 1.0, dim, p))
    scale_phi = max(abs(phi1), abs(slope1), 1e-300)
    atol = (tol * 1e-6 * scale_phi, tol * 1e-6 * scale_phi ** (p - 1.0))

    r, y = 1.0, (float(phi1), float(flux1))
    f = rhs(r, *y)
    rs, phis, fluxes = [r], [y[0]], [y[1]]
    h = 1e-3 if h_boundary is None else min(1e-3, h_boundary)
    accepted = rejected = 0
    max_err = 0.0
    first_zero = rstar = None
    sign_changes = 0
    err_exp = -1.0 / 5.0

    while r < r_max:
        h_cap = (MAX_RATIO - 1.0) * r
        if h_boundary is not None and r - 1.0 < 0.1:
            h_cap = min(h_cap, h_boundary)
        h = min(h, h_cap, r_max - r)
        if r_max - (r + h) < 1e-12 * r_max:
            h = r_max - r
        if h < 1e-14 * r:
            raise IntegrationError("step size underflow", r)

        k = [f]
        for i in range(1, 7):
            a = _A[i]
            y_phi = y[0] + h * sum(a[j] * k[j][0] for j in range(i))
            y_flux = y[1] + h * sum(a[j] * k[j][1] for j in range(i))
            if i == 6:
                y_new = (y_phi, y_flux)
            k.append(rhs(r + _C[i] * h, y_phi, y_flux))
        err = 0.0
        for comp in range(2):
            e = h * sum(_E[j] * k[j][comp] for j in range(7))
            sc = atol[comp] + tol * max(abs(y[comp]), abs(y_new[comp]))
            err = max(err, abs(e) / sc)
        if not (math.isfinite(y_new[0]) and math.isfinite(y_new[1]) and math.isfinite(err)):
            raise IntegrationError("non-finite state", r)

        if err > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * err**err_exp)
            continue

        accepted += 1
        max_err = max(max_err, err)
        r_new = r + h
        # F sign change: positive -> non-positive marks the critical radius.
        if (y[1] > 0.0 >= y_new[1]) or (y[1] < 0.0 < y_new[1]):
            sign_changes += 1
            th = _bisect_event(r, h, y, k, 1, y[1])
            re = r + th * h
            ye = _dense(r, h, y, None, k, th)
            if rstar is None and y[1] > 0.0:
                rstar = re
                if re < r_new:
                    rs.append(re)
                    phis.append(ye[0])
                    fluxes.append(0.0)
        if stop_at_zero and y[0] > 0.0 >= y_new[0]:
            th = _bisect_event(r, h, y, k, 0, y[0])
            re = r + th * h
            ye = _dense(r, h, y, None, k, th)
            first_zero = re
            if re > rs[-1]:
                rs.append(re)
                phis.append(max(ye[0], 0.0))
                fluxes.append(ye[1])
            break

        r, y, f = r_new, y_new, k[6]
        rs.append(r)
        phis.append(y[0])
        fluxes.append(y[1])
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err**err_exp))
        h *= fac

    r_arr = np.asarray(rs)
    phi_arr = np.asarray(phis)
    flux_arr = np.asarray(fluxes)
    dphi = flux_to_slope(flux_arr, r_arr, dim, p)
    g = spec.weight(r_arr)
    src = np.sign(phi_arr) * np.abs(phi_arr) ** (p - 1.0)
    dflux = -lam * r_arr ** (dim - 1) * g * src
    return Trajectory(
        _readonly(r_arr), _readonly(phi_arr), _readonly(flux_arr),
        _readonly(dphi), _readonly(dflux),
        Events(first_zero, rstar, sign_changes),
        StepStats(accepted, rejected, max_err),
        dim, p, float(lam),
    )


def _splines(traj: Trajectory):
    phi_s = CubicHermiteSpline(traj.r, traj.phi, traj.dphi)
    flux_s = CubicHermiteSpline(traj.r, traj.flux, traj.dflux)
    return phi_s, flux_s


def resample(traj: Trajectory, radii) -> tuple[np.ndarray, np.ndarray]:
    """(phi, phi') at ``radii`` from Hermite interpolation of (phi, F).

    Knot values are reproduced exactly.  Where both bracketing knot values
    of phi are positive the result is kept positive.
    """
    radii = np.asarray(radii, dtype=float)
    lo, hi = traj.r[0], traj.r[-1]
    if np.any(radii < lo - 1e-12 * lo) or np.any(radii > hi * (1 + 1e-12)):
        raise ValueError(f"radii outside the integrated range [{lo}, {hi}]")
    radii = np.clip(radii, lo, hi)
    phi_s, flux_s = _splines(traj)
    phi = phi_s(radii)
    idx = np.clip(np.searchsorted(traj.r, radii) - 1, 0, len(traj.r) - 2)
    left, right = traj.phi[idx], traj.phi[idx + 1]
    bad = (phi <= 0) & (left > 0) & (right > 0)
    if np.any(bad):
        w = (radii - traj.r[idx]) / (traj.r[idx + 1] - traj.r[idx])
        phi = np.where(bad, (1 - w) * left + w * right, phi)
    dphi = flux_to_slope(flux_s(radii), radii, traj.dim, traj.p)
    return phi, dphi


def resample_flux(traj: Trajectory, radii) -> np.ndarray:
    return _splines(traj)[1](np.asarray(radii, dtype=float))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def node_quadrature(traj: Trajectory, integrand, r_lo: float | None = None, r_hi: float | None = None) -> float:
    """Composite Gauss-Legendre quadrature over the node intervals.

    ``integrand(r, phi, dphi)`` is evaluated on the interpolated profile.
    """
    r = traj.r
    lo = r[0] if r_lo is None else r_lo
    hi = r[-1] if r_hi is None else r_hi
    if hi <= lo:
        return 0.0
    edges = r[(r > lo) & (r < hi)]
    edges = np.concatenate(([lo], edges, [hi]))
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    phi, dphi = resample(traj, pts)
    vals = integrand(pts, phi, dphi).reshape(len(a), -1)
    return float(np.sum(half * (vals @ _GL_W)))
