"""Numerical certificates for the qualitative and quantitative properties of
a computed principal eigenpair.

Each ``verify_*`` function is a pure function of an :class:`EigenSolution`
and returns one :class:`CheckResult`.  Constants that only exist abstractly
(decay constants, Hoelder exponents, envelope constants) are fitted from the
trajectory and reported; pass/fail rests on positivity, finiteness, and the
explicitly computable parts such as exponents.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    EnvelopeParams,
    K_beta,
    char_length,
    decay_exponents,
    log_factor_h,
    modulation_sigma,
    robin_slope,
    sphere_area,
    transition_tau,
)
from .ode import node_quadrature, resample, resample_flux
from .solver import BoundaryKind, EigenSolution, gradient_energy, robin_slope_residual, weighted_mass
from .weights import WeightDiagnostics, diagnostics

HARD_CHECKS = frozenset({"rstar_uniqueness", "fundamental_identity_residual", "energy_identity", "robin_slope"})

ENERGY_TOL = 1e-6
IDENTITY_TOL = 1e-6
SLOPE_TOL = 1e-8
EXPONENT_TOL = 0.05
RSTAR_EXCLUSION = 1e-6


class VerificationError(ValueError):
    """A check's precondition does not hold for this solution."""


def json_safe(x):
    """JSON-compatible scalar; non-finite floats become strings."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    constants: dict = field(default_factory=dict)
    note: str = ""

    @property
    def hard(self) -> bool:
        return self.name in HARD_CHECKS

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "pass": bool(self.passed),
            "margin": json_safe(self.margin),
            "constants": {k: json_safe(v) for k, v in sorted(self.constants.items())},
        }
        if self.note:
            out["note"] = self.note
        return out


def _skipped(name: str, reason: str) -> CheckResult:
    return CheckResult(name, True, math.inf, {}, f"skipped: {reason}")


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[CheckResult, ...]

    def __iter__(self):
        return iter(self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.checks]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def hard_failures(self) -> list[str]:
        return [c.name for c in self.checks if c.hard and not c.passed]

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.checks]

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_list(), indent=indent, sort_keys=True)


def _fit_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _sample(sol: EigenSolution, radii):
    phi, dphi = resample(sol.trajectory, radii)
    return phi, dphi


def verify_energy_identity(sol: EigenSolution) -> CheckResult:
    """omega int |phi'|^p r^{N-1} + beta omega phi(1)^p = lambda_1 (unit mass)."""
    spec = sol.spec
    mass = weighted_mass(sol.trajectory, spec)
    energy = gradient_energy(sol.trajectory, spec)
    boundary = sol.beta * sphere_area(sol.dim) * abs(sol.phi_at_1) ** sol.p
    if sol.boundary_kind is BoundaryKind.DIRICHLET:
        boundary = 0.0
    quotient = (energy + boundary) / mass
    residual = abs(quotient - sol.lambda1) / sol.lambda1
    return CheckResult(
        "energy_identity",
        residual <= ENERGY_TOL,
        ENERGY_TOL - residual,
        {"residual": residual, "gradient_energy": energy, "boundary_term": boundary, "mass": mass},
    )


def verify_robin_slope(sol: EigenSolution) -> CheckResult:
    if sol.boundary_kind is BoundaryKind.DIRICHLET:
        return _skipped("robin_slope", "Dirichlet boundary")
    residual = robin_slope_residual(sol)
    return CheckResult("robin_slope", residual <= SLOPE_TOL, SLOPE_TOL - residual, {"residual": residual})


def verify_decay(sol: EigenSolution, window: tuple[float, float] = (0.1, 0.5)) -> CheckResult:
    """Power-law decay of phi and phi' on [0.1 R, 0.5 R]."""
    R = sol.R_max_used
    if R < 100 * sol.r_star:
        raise VerificationError(f"decay window too short: R_max = {R:g} < 100 r_* = {100 * sol.r_star:g}")
    rate, grad_rate = decay_exponents(sol.dim, sol.p)
    r = np.geomspace(window[0] * R, window[1] * R, 200)
    phi, dphi = _sample(sol, r)
    if np.any(phi <= 0) or np.any(dphi >= 0):
        return CheckResult("decay_sandwich", False, -math.inf, {}, "profile not positive and decreasing on the window")
    slope = _fit_slope(r, phi)
    grad_slope = _fit_slope(r, -dphi)
    scaled = phi * r**rate
    c1, c2 = float(scaled.min()), float(scaled.max())
    err = max(abs(slope + rate), abs(grad_slope + grad_rate))
    passed = err <= EXPONENT_TOL and 0 < c1 <= c2 < math.inf
    return CheckResult(
        "decay_sandwich",
        passed,
        EXPONENT_TOL - err,
        {"C1": c1, "C2": c2, "slope": slope, "gradient_slope": grad_slope,
         "expected_slope": -rate, "expected_gradient_slope": -grad_rate},
    )


def verify_boundary_expansion(sol: EigenSolution, alpha_min: float = 0.5) -> CheckResult:
    """phi(1+t) - phi(1)(1 + beta^{1/(p-1)} t) = O(t^{1+alpha}) as t -> 0."""
    name = "boundary_expansion"
    if sol.boundary_kind is BoundaryKind.DIRICHLET:
        return _skipped(name, "Dirichlet boundary")
    traj = sol.trajectory
    near = traj.r[traj.r < 1.1]
    if len(near) < 2 or np.max(np.diff(near)) > 1e-3 * (1 + 1e-9):
        raise VerificationError("node spacing near r = 1 exceeds 1e-3; solve with a boundary step cap")
    t = np.geomspace(1e-4, 1e-1, 61)
    phi, _ = _sample(sol, 1.0 + t)
    b = robin_slope(sol.beta, sol.p)
    rho = np.abs(phi - sol.phi_at_1 * (1.0 + b * t))
    floor = 1e-13 * sol.phi_at_1
    if rho.max() <= floor:
        return CheckResult(name, True, math.inf, {"K": 0.0, "alpha_fit": math.nan}, "vacuous: residual below roundoff")
    keep = rho > floor
    slope = _fit_slope(t[keep], rho[keep])
    alpha = slope - 1.0
    K = float(np.max(rho[keep] / t[keep] ** slope))
    return CheckResult(name, slope >= 1.0 + alpha_min, slope - (1.0 + alpha_min),
                       {"K": K, "alpha_fit": alpha, "slope": slope})


def _half_slope_distance(sol: EigenSolution, b: float) -> float:
    """First t at which |phi'(1+t)| drops below b/2."""
    t = np.geomspace(1e-6, max(sol.r_star - 1.0, 2e-6), 400)
    _, dphi = _sample(sol, 1.0 + t)
    below = np.nonzero(np.abs(dphi) < 0.5 * b)[0]
    return float(t[below[0]]) if len(below) else float(sol.r_star - 1.0)


def verify_gradient_boundary(sol: EigenSolution, delta_probe: float | None = None, alpha: float = 0.5) -> CheckResult:
    """Near the boundary |phi'| stays between b/2 and M b (1 + C t^alpha),
    with b = beta^{1/(p-1)} phi(1) = phi'(1)."""
    name = "gradient_boundary"
    if not (sol.boundary_kind is BoundaryKind.ROBIN and sol.beta > 0):
        return _skipped(name, "needs a Robin solution with beta > 0")
    b = robin_slope(sol.beta, sol.p) * sol.phi_at_1
    gap = sol.r_star - 1.0
    if delta_probe is None:
        delta_probe = min(0.5 * _half_slope_distance(sol, b), 0.5 * gap)
    if not 0 < delta_probe <= gap:
        raise VerificationError(f"probe radius {delta_probe:g} must lie in (0, r_* - 1 = {gap:g}]")
    t = np.concatenate(([0.0], np.geomspace(1e-6 * delta_probe, delta_probe, 200)))
    _, dphi = _sample(sol, 1.0 + t)
    ratio = np.abs(dphi) / b
    m = 0.5
    M = float(max(1.0, ratio.max()))
    excess = np.maximum(ratio[1:] / M - 1.0, 0.0)
    C = float(np.max(excess / t[1:] ** alpha))
    lower = float(ratio.min())
    return CheckResult(
        name,
        lower >= m and m < M,
        lower - m,
        {"m": m, "M": M, "C": C, "delta_probe": delta_probe, "min_ratio": lower, "boundary_gradient": b},
    )


def _sign_changes(flux: np.ndarray) -> int:
    s = np.sign(flux)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def verify_rstar_uniqueness(sol: EigenSolution) -> CheckResult:
    name = "rstar_uniqueness"
    if sol.boundary_kind is BoundaryKind.NEUMANN:
        changes = _sign_changes(sol.trajectory.flux[1:])
        return CheckResult(name, changes == 0, 1.0 if changes == 0 else -float(changes),
                           {"sign_changes": float(changes), "r_star": 1.0}, "critical point on the boundary")
    changes = _sign_changes(sol.trajectory.flux)
    f_at = float(resample_flux(sol.trajectory, [sol.r_star])[0])
    scale = float(np.max(np.abs(sol.trajectory.flux)))
    return CheckResult(
        name,
        changes == 1,
        1.0 if changes == 1 else -float(abs(changes - 1)),
        {"sign_changes": float(changes), "r_star": sol.r_star, "flux_at_rstar": abs(f_at) / scale},
    )


def verify_gradient_farfield(sol: EigenSolution) -> CheckResult:
    """On r >= 2 r_*: C1 r^{-(N-1)/(p-1)} <= |phi'| <= C2 (log r)^e r^{-(N-1)/(p-1)}."""
    R = sol.R_max_used
    if R < 4 * sol.r_star:
        raise VerificationError(f"far-field range needs R_max >= 4 r_* (R_max = {R:g}, r_* = {sol.r_star:g})")
    dim, p = sol.dim, sol.p
    grad_rate = decay_exponents(dim, p)[1]
    r = np.geomspace(2 * sol.r_star, R, 400)
    _, dphi = _sample(sol, r)
    scaled = np.abs(dphi) * r**grad_rate
    logexp = (dim - p) / (dim * (p - 1.0))
    c1 = float(scaled.min())
    c2 = float(np.max(scaled / np.log(r) ** logexp))
    passed = 0 < c1 and math.isfinite(c2)
    return CheckResult("gradient_farfield", passed, c1 if passed else -1.0, {"C1_hat": c1, "C2_hat": c2})


def verify_nondegeneracy(sol: EigenSolution, d_min: float = 1e-4, rho_min: float = 1e-2) -> CheckResult:
    """|phi'(r)| >= c0 |r - r_*|^{1/(p-1)} near r_*, with the explicit c0."""
    name = "nondegeneracy"
    if sol.boundary_kind is BoundaryKind.NEUMANN:
        return _skipped(name, "critical point on the boundary")
    p = sol.p
    rs = sol.r_star
    expo = 1.0 / (p - 1.0)
    phi_rs = float(_sample(sol, [rs])[0][0])
    c0 = (sol.lambda1 * sol.weight.scalar(rs) * phi_rs ** (p - 1.0) / 4.0) ** expo
    rho_max = min(rs - 1.0, sol.R_max_used - rs)
    if rho_max <= 4 * d_min:
        raise VerificationError(f"critical point too close to the boundary (r_* - 1 = {rs - 1.0:.3g})")
    d = np.geomspace(d_min, rho_max, 400)
    _, left = _sample(sol, rs - d[d < rs - 1.0])
    _, right = _sample(sol, rs + d)
    bound = c0 * d**expo
    ok = np.ones(len(d), dtype=bool)
    ok[: len(left)] &= np.abs(left) >= bound[: len(left)]
    ok &= np.abs(right) >= bound
    bad = np.nonzero(~ok)[0]
    rho0 = float(d[bad[0]]) if len(bad) else float(rho_max)
    fit = d[d <= min(1e-2, 0.5 * rho_max)]
    _, fl = _sample(sol, rs - fit)
    _, fr = _sample(sol, rs + fit)
    exponent = 0.5 * (_fit_slope(fit, np.abs(fl)) + _fit_slope(fit, np.abs(fr)))
    local = float(min(np.abs(fl[0]), np.abs(fr[0])) / fit[0] ** expo)
    passed = rho0 >= rho_min and abs(exponent - expo) <= EXPONENT_TOL and c0 <= local
    return CheckResult(
        name,
        passed,
        min(rho0 / rho_min - 1.0, EXPONENT_TOL - abs(exponent - expo)),
        {"c0": c0, "rho0": rho0, "exponent": exponent, "expected_exponent": expo, "local_coefficient": local},
    )


def verify_fundamental_identity(sol: EigenSolution) -> CheckResult:
    """F(1) = lambda_1 int_1^{r_*} s^{N-1} g phi^{p-1} ds, since F(r_*) = 0."""
    name = "fundamental_identity_residual"
    if sol.boundary_kind is BoundaryKind.NEUMANN:
        return _skipped(name, "critical point on the boundary")
    dim, p, g = sol.dim, sol.p, sol.weight
    rhs = sol.lambda1 * node_quadrature(
        sol.trajectory, lambda r, phi, dphi: r ** (dim - 1) * g(r) * np.abs(phi) ** (p - 1.0), r_hi=sol.r_star
    )
    lhs = float(sol.trajectory.flux[0])
    residual = abs(lhs - rhs) / abs(lhs)
    return CheckResult(name, residual <= IDENTITY_TOL, IDENTITY_TOL - residual,
                       {"residual": residual, "boundary_flux": lhs, "interior_integral": rhs})


def verify_value_bounds(sol: EigenSolution, diag: WeightDiagnostics | None = None) -> CheckResult:
    """C_g/K <= phi(1) < (lambda_1/(beta omega))^{1/p}; the 1/(p-1) variant is reported."""
    name = "value_bounds"
    if not (sol.boundary_kind is BoundaryKind.ROBIN and sol.beta > 0):
        return _skipped(name, "needs a Robin solution with beta > 0")
    diag = diag or diagnostics(sol.weight, sol.dim, sol.p)
    if not diag.admissible_finite_moment:
        return _skipped(name, "weight decay rate must exceed the dimension")
    p, phi1 = sol.p, sol.phi_at_1
    lower = diag.cg_constant / K_beta(sol.beta, sol.dim, p)
    base = sol.lambda1 / (sol.beta * sphere_area(sol.dim))
    upper_p, upper_pm1 = base ** (1.0 / p), base ** (1.0 / (p - 1.0))
    margin = min(phi1 / lower - 1.0, upper_p / phi1 - 1.0)
    return CheckResult(
        name,
        lower <= phi1 < upper_p,
        margin,
        {"lower": lower, "upper_p": upper_p, "upper_pminus1": upper_pm1, "phi1": phi1,
         "upper_pminus1_holds": phi1 < upper_pm1},
    )


def verify_rstar_bounds(sol: EigenSolution, samples: int = 2001) -> CheckResult:
    name = "rstar_bounds"
    if not (sol.boundary_kind is BoundaryKind.ROBIN and sol.beta > 0):
        return _skipped(name, "needs a Robin solution with beta > 0")
    dim, p, beta, lam = sol.dim, sol.p, sol.beta, sol.lambda1
    r = np.concatenate((np.linspace(1.0, sol.r_star, samples), sol.weight.breakpoints()))
    r = r[(r >= 1.0) & (r <= sol.r_star)]
    gv = sol.weight(r)
    g_min, g_max = float(gv.min()), float(gv.max())
    lower = (1.0 + dim * beta / (lam * g_max * K_beta(beta, dim, p) ** (p - 1.0))) ** (1.0 / dim)
    upper = (1.0 + dim * beta / (lam * g_min)) ** (1.0 / dim)
    rs = sol.r_star
    return CheckResult(
        name,
        lower <= rs <= upper,
        min(rs / lower - 1.0, upper / rs - 1.0),
        {"lower": lower, "upper": upper, "r_star": rs, "g_min": g_min, "g_max": g_max},
    )


def envelope_params(sol: EigenSolution, gamma: float = 2.0, rho0: float | None = None) -> EnvelopeParams:
    """delta = min(rho0/2, l/2) with l = min(L, r_* - 1)."""
    if rho0 is None:
        rho0 = verify_nondegeneracy(sol).constants["rho0"]
    L = char_length(sol.beta, sol.dim)
    ell = min(L, sol.r_star - 1.0)
    return EnvelopeParams(gamma=gamma, delta=min(rho0 / 2.0, ell / 2.0), length_scale=L, r_star=sol.r_star)


def envelopes(r, sol: EigenSolution, params: EnvelopeParams) -> tuple[np.ndarray, np.ndarray]:
    """(g_L, g_U) at radii ``r``."""
    r = np.asarray(r, dtype=float)
    p, dim = sol.p, sol.dim
    tau = transition_tau(r - 1.0, params)
    near = robin_slope(sol.beta, p)
    far = r ** (-decay_exponents(dim, p)[1])
    sigma = modulation_sigma(r, params.r_star, params.delta, p)
    g_lo = sigma * (tau * near + (1.0 - tau) * far)
    g_hi = tau * near + (1.0 - tau) * far * log_factor_h(r, dim, p)
    return g_lo, g_hi


def envelope_constants(sol: EigenSolution, params: EnvelopeParams):
    """(C1, C2, node mask) over trajectory nodes outside the r_* exclusion."""
    traj = sol.trajectory
    mask = np.abs(traj.r - params.r_star) >= RSTAR_EXCLUSION
    r = traj.r[mask]
    g_lo, g_hi = envelopes(r, sol, params)
    grad = np.abs(traj.dphi[mask])
    return float(np.min(grad / g_lo)), float(np.max(grad / g_hi)), mask


def verify_unified_envelope(
    sol: EigenSolution,
    params: EnvelopeParams | None = None,
    beta_range: tuple[float, float] = (0.1, 10.0),
    gamma: float = 2.0,
) -> CheckResult:
    name = "unified_envelope"
    if not (sol.boundary_kind is BoundaryKind.ROBIN and sol.beta > 0):
        return _skipped(name, "needs a Robin solution with beta > 0")
    lo, hi = beta_range
    if not lo <= sol.beta <= hi:
        raise VerificationError(f"beta = {sol.beta:g} outside the envelope range [{lo:g}, {hi:g}]")
    params = params or envelope_params(sol, gamma)
    c1, c2, _ = envelope_constants(sol, params)
    passed = c1 > 0 and math.isfinite(c2)
    return CheckResult(
        name,
        passed,
        c1 if passed else -1.0,
        {"C1": c1, "C2": c2, "conditioning": c2 / c1 if c1 > 0 else math.inf,
         "gamma": params.gamma, "delta": params.delta, "length_scale": params.length_scale},
    )


def verify_hardy_sobolev(sol: EigenSolution, diag: WeightDiagnostics | None = None) -> CheckResult:
    """Reports int g phi^p / (||g||_{N/p,inf} int |phi'|^p); no bound is asserted."""
    diag = diag or diagnostics(sol.weight, sol.dim, sol.p)
    mass = weighted_mass(sol.trajectory, sol.spec)
    energy = gradient_energy(sol.trajectory, sol.spec)
    denom = diag.lorentz_quasinorm * energy
    ratio = mass / denom if denom > 0 else math.inf
    boundary = 0.0 if sol.boundary_kind is BoundaryKind.DIRICHLET else sol.beta * sphere_area(sol.dim) * sol.phi_at_1**sol.p
    passed = energy > 0 and math.isfinite(ratio)
    return CheckResult(
        "hardy_sobolev_ratio",
        passed,
        energy / mass if passed else -1.0,
        {"ratio": ratio, "gradient_energy": energy, "lambda_minus_boundary": sol.lambda1 - boundary,
         "quasinorm": diag.lorentz_quasinorm},
    )


def verify_all(sol: EigenSolution, diag: WeightDiagnostics | None = None, gamma: float = 2.0,
               envelope_range: tuple[float, float] = (0.1, 10.0)) -> VerificationReport:
    """Full battery in a fixed order."""
    diag = diag or diagnostics(sol.weight, sol.dim, sol.p)
    nondeg = verify_nondegeneracy(sol)
    checks = [
        verify_energy_identity(sol),
        verify_robin_slope(sol),
        verify_decay(sol),
        verify_boundary_expansion(sol),
        verify_gradient_boundary(sol),
        verify_rstar_uniqueness(sol),
        verify_gradient_farfield(sol),
        nondeg,
        verify_fundamental_identity(sol),
        verify_value_bounds(sol, diag),
        verify_rstar_bounds(sol),
    ]
    if sol.boundary_kind is BoundaryKind.ROBIN and envelope_range[0] <= sol.beta <= envelope_range[1]:
        rho0 = nondeg.constants.get("rho0", sol.r_star - 1.0)
        checks.append(verify_unified_envelope(sol, envelope_params(sol, gamma, rho0), envelope_range))
    else:
        checks.append(_skipped("unified_envelope", "beta outside the envelope range"))
    checks.append(verify_hardy_sobolev(sol, diag))
    return VerificationReport(tuple(checks))
