"""Principal eigenpair by shooting on lambda.

Each trial lambda is shot from r = 1 with the boundary data and classified
at the truncation radius R: a zero of phi, or a terminal decay at least as
steep as the far-field rate, counts as Overshoot; anything flatter is
Undershoot.  Bisection converges to the truncated-domain value lam(R),
computed for each R in a geometric schedule and extrapolated in R.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate as sp_integrate

from .model import ParameterError, ProblemSpec, decay_exponents, robin_slope, sphere_area
from .ode import Trajectory, integrate, node_quadrature
from .weights import RadialWeight, check_admissible

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class BracketError(SolverError):
    """No Overshoot found below the lambda ceiling: the weight is too weak."""


class TruncationError(SolverError):
    """The truncated eigenvalues are not monotone across the schedule."""


class Shot(str, Enum):
    OVERSHOOT = "overshoot"
    UNDERSHOOT = "undershoot"


class BoundaryKind(str, Enum):
    ROBIN = "robin"
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class SolverConfig:
    lambda_tol: float = 1e-8
    ode_tol: float = 1e-10
    r_max_schedule: tuple[float, ...] = (100.0, 200.0, 400.0)
    logderiv_threshold: float = 1.0
    lambda_ceiling: float = 1e8
    h_boundary: float = 1e-3

    def __post_init__(self):
        if not (self.lambda_tol > 0 and self.ode_tol > 0):
            raise ParameterError("solver tolerances must be positive")
        sched = tuple(float(r) for r in self.r_max_schedule)
        if not sched or sched[0] <= 1 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ParameterError(f"truncation schedule must be increasing and > 1, got {sched}")
        object.__setattr__(self, "r_max_schedule", sched)
        if not self.logderiv_threshold > 0:
            raise ParameterError("log-derivative threshold must be positive")

    @classmethod
    def geometric(cls, r_base: float = 100.0, levels: int = 3, **kw) -> "SolverConfig":
        return cls(r_max_schedule=tuple(r_base * 2.0**i for i in range(levels)), **kw)


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """Normalized principal eigenpair; ``bracket`` is the final bisection
    bracket at the largest truncation radius, ``lambda1`` the value
    extrapolated across the schedule."""

    lambda1: float
    bracket: tuple[float, float]
    trajectory: Trajectory
    phi_at_1: float
    r_star: float
    R_max_used: float
    boundary_kind: BoundaryKind
    normalization_residual: float
    spec: ProblemSpec
    truncated_lambdas: tuple[float, ...] = ()
    extrapolation_order: float = math.nan
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def beta(self) -> float:
        return self.spec.beta

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def p(self) -> float:
        return self.spec.p

    @property
    def weight(self) -> RadialWeight:
        return self.spec.weight

    @property
    def boundary_slope(self) -> float:
        return float(self.trajectory.dphi[0])


def terminal_log_derivative(traj: Trajectory) -> float:
    """-R phi'(R) / phi(R) at the last node."""
    phi, dphi, r = traj.phi[-1], traj.dphi[-1], traj.r[-1]
    if phi <= 0:
        return math.inf
    return float(-r * dphi / phi)


def shot_margin(traj: Trajectory, dim: int, p: float, theta: float) -> float:
    """Relative distance of the terminal log-derivative from the threshold;
    values within 1e-2 mean the classification is ambiguous at this R."""
    if traj.stopped_at_zero:
        return math.inf
    rate = decay_exponents(dim, p)[0]
    return terminal_log_derivative(traj) / (theta * rate) - 1.0


def classify_shot(traj: Trajectory, dim: int, p: float, theta: float = 1.0) -> Shot:
    if traj.stopped_at_zero:
        return Shot.OVERSHOOT
    rate = decay_exponents(dim, p)[0]
    if terminal_log_derivative(traj) < theta * rate:
        return Shot.UNDERSHOOT
    return Shot.OVERSHOOT


def _initial_data(kind: BoundaryKind) -> tuple[float, float | None]:
    if kind is BoundaryKind.DIRICHLET:
        return 0.0, 1.0
    return 1.0, None


def _shoot(spec, kind, lam, r_max, cfg, phi1=None, **kw) -> Trajectory:
    init, flux1 = _initial_data(kind)
    if phi1 is not None and kind is not BoundaryKind.DIRICHLET:
        init = phi1
    return integrate(spec, lam, init, r_max, cfg.ode_tol, flux1=flux1, **kw)


def _classify(spec, kind, lam, r_max, cfg, phi1=None) -> Shot:
    traj = _shoot(spec, kind, lam, r_max, cfg, phi1)
    return classify_shot(traj, spec.dim, spec.p, cfg.logderiv_threshold)


def _bisect(spec, kind, r_max, lo, hi, cfg, phi1=None) -> tuple[float, float]:
    while hi - lo > cfg.lambda_tol * hi:
        mid = 0.5 * (lo + hi)
        if _classify(spec, kind, mid, r_max, cfg, phi1) is Shot.OVERSHOOT:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _initial_bracket(spec, kind, r_max, cfg, phi1=None):
    hi = 1.0
    lo = 0.0
    while _classify(spec, kind, hi, r_max, cfg, phi1) is Shot.UNDERSHOOT:
        lo = hi
        hi *= 2.0
        if hi > cfg.lambda_ceiling:
            raise BracketError(
                f"no overshoot below lambda = {cfg.lambda_ceiling:g} at R = {r_max:g}; weight too weak"
            )
    return lo, hi


def _bracket_near(spec, kind, r_max, center, width, cfg, phi1=None):
    lo, hi = center - width, center + width
    for _ in range(60):
        lo = max(lo, 0.0)
        lo_ok = lo == 0.0 or _classify(spec, kind, lo, r_max, cfg, phi1) is Shot.UNDERSHOOT
        hi_ok = _classify(spec, kind, hi, r_max, cfg, phi1) is Shot.OVERSHOOT
        if lo_ok and hi_ok:
            return lo, hi
        width *= 4.0
        if not lo_ok:
            lo = center - width
        if not hi_ok:
            hi = center + width
            if hi > cfg.lambda_ceiling:
                break
    return _initial_bracket(spec, kind, r_max, cfg, phi1)


def extrapolate(values, ratio: float = 2.0) -> tuple[float, float]:
    """Aitken extrapolation of the last three truncated eigenvalues.

    Returns (limit, estimated order in 1/R).  Falls back to the last value
    when the differences are not a contracting same-sign sequence.
    """
    if len(values) < 3:
        return float(values[-1]), math.nan
    l1, l2, l3 = values[-3:]
    d1, d2 = l2 - l1, l3 - l2
    if d1 == 0 or d2 == 0 or d1 * d2 < 0 or abs(d2) >= abs(d1):
        return float(l3), math.nan
    order = math.log(d1 / d2) / math.log(ratio)
    return float(l3 - d2 * d2 / (d2 - d1)), order


def _tail_integral(weight: RadialWeight, dim: int, radius: float, expo: float) -> float:
    """int_R^inf r^{N-1} g(r) (r/R)^{-expo} dr."""
    l = weight.decay_rate
    if l + expo <= dim:
        raise SolverError("divergent normalization tail (weight decays too slowly)")
    start = max(radius, weight.r_last) if math.isfinite(weight.r_last) else radius
    total = weight.scalar(start) * start**dim * (start / radius) ** (-expo) / (l + expo - dim)
    if start > radius:
        body, _ = sp_integrate.quad(
            lambda u: weight.scalar(math.exp(u)) * math.exp(dim * u) * (math.exp(u) / radius) ** (-expo),
            math.log(radius), math.log(start), epsrel=1e-12, limit=200,
        )
        total += body
    return total


def weighted_mass(traj: Trajectory, spec: ProblemSpec, power: float | None = None) -> float:
    """omega * int_1^inf r^{N-1} g phi^power dr, with the far tail continued
    along phi(R) (r/R)^{-(N-p)/(p-1)}."""
    power = spec.p if power is None else power
    g = spec.weight
    dim = spec.dim
    body = node_quadrature(traj, lambda r, phi, dphi: r ** (dim - 1) * g(r) * np.abs(phi) ** power)
    rate = decay_exponents(dim, spec.p)[0]
    R = traj.r_end
    tail = abs(traj.phi[-1]) ** power * _tail_integral(g, dim, R, rate * power)
    return sphere_area(dim) * (body + tail)


def gradient_energy(traj: Trajectory, spec: ProblemSpec) -> float:
    """omega * int_1^inf |phi'|^p r^{N-1} dr with the analytic far tail."""
    dim, p = spec.dim, spec.p
    body = node_quadrature(traj, lambda r, phi, dphi: np.abs(dphi) ** p * r ** (dim - 1))
    rate = decay_exponents(dim, p)[0]
    R = traj.r_end
    tail = rate ** (p - 1.0) * abs(traj.phi[-1]) ** p * R ** (dim - p)
    return sphere_area(dim) * (body + tail)


def normalize(traj: Trajectory, spec: ProblemSpec) -> tuple[Trajectory, float]:
    """Rescale so that omega int r^{N-1} g phi^p dr = 1."""
    if np.any(traj.phi < 0):
        raise SolverError("cannot normalize a sign-changing profile")
    mass = weighted_mass(traj, spec)
    scaled = traj.scaled(mass ** (-1.0 / spec.p))
    return scaled, abs(weighted_mass(scaled, spec) - 1.0)


def _solve(spec: ProblemSpec, kind: BoundaryKind, cfg: SolverConfig, phi1=None) -> EigenSolution:
    check_admissible(spec.weight, spec.dim, spec.p)
    if kind is BoundaryKind.NEUMANN:
        spec = spec.with_beta(0.0)
    estimates = []
    brackets = []
    for i, r_max in enumerate(cfg.r_max_schedule):
        if i == 0:
            lo, hi = _initial_bracket(spec, kind, r_max, cfg, phi1)
        else:
            prev = estimates[-1]
            width = max(abs(estimates[-1] - estimates[-2]) if i > 1 else 0.02 * prev, 20 * cfg.lambda_tol * prev)
            lo, hi = _bracket_near(spec, kind, r_max, prev, width, cfg, phi1)
        lo, hi = _bisect(spec, kind, r_max, lo, hi, cfg, phi1)
        brackets.append((lo, hi))
        estimates.append(0.5 * (lo + hi))
        log.debug("R=%g lambda_hat=%.12g", r_max, estimates[-1])

    slack = 4 * cfg.lambda_tol * max(estimates)
    for a, b, ra, rb in zip(estimates, estimates[1:], cfg.r_max_schedule, cfg.r_max_schedule[1:]):
        if b > a + slack:
            raise TruncationError(
                f"truncated eigenvalue increased from {a:.12g} (R={ra:g}) to {b:.12g} (R={rb:g})"
            )
    ratio = cfg.r_max_schedule[-1] / cfg.r_max_schedule[-2] if len(cfg.r_max_schedule) > 1 else 2.0
    lam, order = extrapolate(estimates, ratio)

    r_max = cfg.r_max_schedule[-1]
    traj = _shoot(spec, kind, lam, r_max, cfg, phi1, h_boundary=cfg.h_boundary)
    if traj.stopped_at_zero:
        lam = brackets[-1][0]
        traj = _shoot(spec, kind, lam, r_max, cfg, phi1, h_boundary=cfg.h_boundary)
    traj, residual = normalize(traj, spec)
    if kind is BoundaryKind.NEUMANN:
        r_star = 1.0
    else:
        r_star = traj.events.f_zero_rstar
        if r_star is None:
            raise SolverError("eigenfunction has no critical point inside the truncated domain")
    return EigenSolution(
        lambda1=lam,
        bracket=brackets[-1],
        trajectory=traj,
        phi_at_1=float(traj.phi[0]),
        r_star=float(r_star),
        R_max_used=r_max,
        boundary_kind=kind,
        normalization_residual=residual,
        spec=spec,
        truncated_lambdas=tuple(estimates),
        extrapolation_order=order,
        config=cfg,
    )


def solve_principal(spec: ProblemSpec, config: SolverConfig | None = None, *, phi1: float | None = None) -> EigenSolution:
    """Robin principal eigenpair; needs beta > 0."""
    if not spec.beta > 0:
        raise ParameterError("Robin solve needs beta > 0; use solve_neumann for beta = 0")
    return _solve(spec, BoundaryKind.ROBIN, config or SolverConfig(), phi1)


def solve_neumann(spec: ProblemSpec, config: SolverConfig | None = None) -> EigenSolution:
    return _solve(spec, BoundaryKind.NEUMANN, config or SolverConfig())


def solve_dirichlet(spec: ProblemSpec, config: SolverConfig | None = None) -> EigenSolution:
    return _solve(spec, BoundaryKind.DIRICHLET, config or SolverConfig())


def solve(spec: ProblemSpec, kind: BoundaryKind | str = BoundaryKind.ROBIN, config: SolverConfig | None = None) -> EigenSolution:
    kind = BoundaryKind(kind)
    if kind is BoundaryKind.ROBIN and spec.beta == 0:
        kind = BoundaryKind.NEUMANN
    return _solve(spec, kind, config or SolverConfig())


def robin_slope_residual(sol: EigenSolution) -> float:
    """|phi'(1) - beta^{1/(p-1)} phi(1)| / phi(1)."""
    if sol.boundary_kind is BoundaryKind.DIRICHLET:
        return 0.0
    expected = robin_slope(sol.beta, sol.p) * sol.phi_at_1
    return abs(sol.boundary_slope - expected) / sol.phi_at_1
