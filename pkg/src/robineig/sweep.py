"""Sweeps of the principal eigenvalue over the Robin parameter.

Each beta is an independent solve, so points may be dispatched to a process
pool; results are collected in input order, which keeps the curve bit-for-bit
identical to a sequential run.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ode import resample
from .model import ProblemSpec, robin_slope, sphere_area
from .solver import EigenSolution, SolverConfig, SolverError, solve_dirichlet, solve_neumann, solve_principal
from .verify import CheckResult, VerificationError, verify_boundary_expansion

log = logging.getLogger(__name__)

THREADS_ENV = "EIGENSOLVER_THREADS"
DRIFT_RADII = np.geomspace(1.0, 50.0, 64)


class SweepError(SolverError):
    def __init__(self, beta: float, cause: Exception):
        super().__init__(f"solve failed at beta = {beta:.12g}: {cause}")
        self.beta = beta


@dataclass(frozen=True)
class SweepCurve:
    betas: np.ndarray
    lambdas: np.ndarray
    phi1s: np.ndarray
    rstars: np.ndarray
    neumann_lambda: float
    dirichlet_lambda: float
    derivative_numeric: np.ndarray
    derivative_formula: np.ndarray
    derivative_error: np.ndarray  # estimated discretization error of derivative_numeric
    neumann_phi1: float = math.nan
    drift: np.ndarray | None = None  # sup |phi(beta_i) - phi(beta_{i+1})| on a fixed grid
    dim: int = 0
    p: float = math.nan

    def __len__(self) -> int:
        return len(self.betas)

    @property
    def trace_constant(self) -> float:
        """omega phi_N(1)^p: lambda(beta) <= lambda_N + beta * this constant."""
        return sphere_area(self.dim) * self.neumann_phi1**self.p

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_curve_csv(self, fh)

    @classmethod
    def from_csv(cls, path) -> "SweepCurve":
        meta = {}
        rows = []
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                else:
                    rows.append(line)
        table = list(csv.DictReader(rows))
        col = lambda k: np.array([float(r[k]) for r in table])
        return cls(
            betas=col("beta"),
            lambdas=col("lambda1"),
            phi1s=col("phi1"),
            rstars=col("rstar"),
            neumann_lambda=float(meta["neumann_lambda"]),
            dirichlet_lambda=float(meta["dirichlet_lambda"]),
            derivative_numeric=col("dlambda_numeric"),
            derivative_formula=col("dlambda_formula"),
            derivative_error=np.full(len(table), math.nan),
            neumann_phi1=float(meta.get("neumann_phi1", "nan")),
            dim=int(meta.get("dim", 0)),
            p=float(meta.get("p", "nan")),
        )


CSV_COLUMNS = ("beta", "lambda1", "phi1", "rstar", "dlambda_numeric", "dlambda_formula")


def write_curve_csv(curve: SweepCurve, fh) -> None:
    """Curve table with endpoint metadata on leading ``#`` lines."""
    fh.write(f"# dim = {curve.dim}\n")
    fh.write(f"# p = {curve.p!r}\n")
    fh.write(f"# neumann_lambda = {curve.neumann_lambda!r}\n")
    fh.write(f"# neumann_phi1 = {curve.neumann_phi1!r}\n")
    fh.write(f"# dirichlet_lambda = {curve.dirichlet_lambda!r}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in zip(curve.betas, curve.lambdas, curve.phi1s, curve.rstars,
                   curve.derivative_numeric, curve.derivative_formula):
        writer.writerow([repr(float(v)) for v in row])


def max_workers(n_tasks: int) -> int:
    """Worker count, capped by EIGENSOLVER_THREADS when set."""
    cap = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if cap is not None:
        try:
            limit = int(cap)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {cap!r}") from None
        if limit < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {cap!r}")
    return max(1, min(limit, n_tasks))


def _solve_point(args):
    spec, beta, config = args
    try:
        sol = solve_principal(spec.with_beta(beta), config)
    except Exception as exc:  # re-raised with the offending beta by the caller
        return beta, exc
    profile = resample(sol.trajectory, DRIFT_RADII)[0]
    return beta, (sol.lambda1, sol.phi_at_1, sol.r_star, profile)


def log_derivative(betas, values) -> tuple[np.ndarray, np.ndarray]:
    """d values / d beta from quadratic fits in log beta over sliding 3-point
    windows, plus an error estimate from a wider (quartic or cubic) fit.

    Endpoints get NaN; the error estimate is NaN where no wider fit exists.
    """
    x = np.log(np.asarray(betas, dtype=float))
    y = np.asarray(values, dtype=float)
    n = len(x)
    deriv = np.full(n, math.nan)
    err = np.full(n, math.nan)

    def slope_at(i, lo, hi, deg):
        xs = x[lo:hi] - x[i]
        coef = np.polynomial.polynomial.polyfit(xs, y[lo:hi], deg)
        return coef[1]

    for i in range(1, n - 1):
        d3 = slope_at(i, i - 1, i + 2, 2)
        deriv[i] = d3 / math.exp(x[i])
        if i >= 2 and i <= n - 3:
            wide = slope_at(i, i - 2, i + 3, 4)
        elif n >= 4:
            lo = i - 1 if i + 2 < n else i - 2
            wide = slope_at(i, lo, lo + 4, 3)
        else:
            continue
        err[i] = abs(d3 - wide) / math.exp(x[i])
    return deriv, err


def sweep(
    spec_template: ProblemSpec,
    betas,
    config: SolverConfig | None = None,
    *,
    workers: int | None = None,
    endpoints: bool = True,
) -> SweepCurve:
    """One Robin solve per beta plus the Neumann and Dirichlet endpoints."""
    config = config or SolverConfig()
    betas = np.asarray(betas, dtype=float)
    if betas.ndim != 1 or len(betas) == 0:
        raise ValueError("betas must be a non-empty 1-d sequence")
    if np.any(betas <= 0) or not np.all(np.isfinite(betas)):
        raise ValueError("every beta must be finite and > 0")
    if np.any(np.diff(betas) <= 0):
        raise ValueError("betas must be strictly increasing")
    tasks = [(spec_template, float(b), config) for b in betas]
    n_workers = workers if workers is not None else max_workers(len(tasks))
    n_workers = max(1, min(n_workers, max_workers(len(tasks))))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_solve_point, tasks))
    else:
        results = [_solve_point(t) for t in tasks]
    values = []
    for beta, out in results:
        if isinstance(out, Exception):
            raise SweepError(beta, out) from out
        values.append(out)
    lambdas = np.array([v[0] for v in values])
    phi1s = np.array([v[1] for v in values])
    rstars = np.array([v[2] for v in values])
    profiles = np.array([v[3] for v in values])
    drift = np.max(np.abs(np.diff(profiles, axis=0)), axis=1) if len(values) > 1 else np.zeros(0)

    neumann_lambda = dirichlet_lambda = neumann_phi1 = math.nan
    if endpoints:
        neu = solve_neumann(spec_template, config)
        neumann_lambda, neumann_phi1 = neu.lambda1, neu.phi_at_1
        dirichlet_lambda = solve_dirichlet(spec_template, config).lambda1
    deriv, err = log_derivative(betas, lambdas) if len(betas) >= 3 else (np.full(len(betas), math.nan),) * 2
    formula = sphere_area(spec_template.dim) * phi1s**spec_template.p
    return SweepCurve(
        betas=betas,
        lambdas=lambdas,
        phi1s=phi1s,
        rstars=rstars,
        neumann_lambda=neumann_lambda,
        dirichlet_lambda=dirichlet_lambda,
        derivative_numeric=deriv,
        derivative_formula=formula,
        derivative_error=err,
        neumann_phi1=neumann_phi1,
        drift=drift,
        dim=spec_template.dim,
        p=spec_template.p,
    )


def log_grid(beta_min: float, beta_max: float, points: int, log_spaced: bool = True) -> np.ndarray:
    if points < 1:
        raise ValueError("points must be >= 1")
    if not 0 < beta_min <= beta_max:
        raise ValueError("need 0 < beta_min <= beta_max")
    if points == 1:
        return np.array([beta_min])
    if log_spaced:
        return np.geomspace(beta_min, beta_max, points)
    return np.linspace(beta_min, beta_max, points)


def second_divided_differences(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    first = np.diff(y) / np.diff(x)
    return 2.0 * np.diff(first) / (x[2:] - x[:-2])


def check_monotone_concave(curve: SweepCurve, tol: float = 1e-6) -> CheckResult:
    if len(curve) < 2:
        raise ValueError("monotonicity needs at least two sweep points")
    rel_steps = np.diff(curve.lambdas) / curve.lambdas[1:]
    min_step = float(rel_steps.min())
    consts = {"min_relative_increase": min_step}
    margin = min_step
    passed = min_step > 0
    note = ""
    if len(curve) >= 3:
        dd2 = second_divided_differences(curve.betas, curve.lambdas)
        worst = float(dd2.max())
        consts["max_second_difference"] = worst
        margin = min(margin, tol - worst)
        passed = passed and worst <= tol
    else:
        note = "concavity vacuous with two points"
    consts["rstar_increasing"] = bool(np.all(np.diff(curve.rstars) > 0))
    return CheckResult("monotone_concave", passed, margin, consts, note)


def check_rstar_increasing(curve: SweepCurve) -> CheckResult:
    steps = np.diff(curve.rstars)
    worst = float(steps.min()) if len(steps) else math.inf
    return CheckResult("rstar_increasing", worst > 0, worst, {"min_step": worst})


def check_derivative_formula(curve: SweepCurve, rtol: float = 1e-3) -> CheckResult:
    """Central-difference derivative against omega phi(1)^p at interior points.

    Points whose estimated discretization error exceeds rtol/10 of the formula
    are reported as too coarse and left out of the verdict.
    """
    if len(curve) < 3:
        raise ValueError("derivative check needs at least three sweep points")
    formula = curve.derivative_formula[1:-1]
    numeric = curve.derivative_numeric[1:-1]
    err = curve.derivative_error[1:-1]
    rel = np.abs(numeric - formula) / formula
    coarse = np.isfinite(err) & (err > 0.1 * rtol * formula)
    usable = ~coarse
    consts = {
        "evaluated_points": float(usable.sum()),
        "coarse_points": float(coarse.sum()),
        "formula_positive": bool(np.all(curve.derivative_formula > 0)),
        "formula_decreasing": bool(np.all(np.diff(curve.derivative_formula) < 0)),
    }
    if not usable.any():
        return CheckResult("derivative_formula", True, math.inf, consts, "spacing too coarse at every interior point")
    worst = float(rel[usable].max())
    consts["max_relative_error"] = worst
    note = f"{int(coarse.sum())} interior points too coarse for central differences" if coarse.any() else ""
    passed = worst <= rtol and consts["formula_positive"]
    return CheckResult("derivative_formula", passed, rtol - worst, consts, note)


def check_limits(curve: SweepCurve, tol: float = 1e-6) -> CheckResult:
    """Strict bracketing by the endpoint eigenvalues, the Neumann-side trace
    bound lambda <= lambda_N + beta omega phi_N(1)^p, and a Dirichlet gap
    that shrinks with beta."""
    if not (math.isfinite(curve.neumann_lambda) and math.isfinite(curve.dirichlet_lambda)):
        raise ValueError("curve has no endpoint eigenvalues")
    decades = math.log10(curve.betas[-1] / curve.betas[0])
    if decades < 4 - 1e-9:
        raise VerificationError(f"limit check needs a sweep over >= 4 decades, got {decades:.2f}")
    lam, lam_n, lam_d = curve.lambdas, curve.neumann_lambda, curve.dirichlet_lambda
    trace = curve.trace_constant
    lower_gap = float(np.min(lam - lam_n))
    upper_gap = float(np.min(lam_d - lam))
    trace_excess = float(np.max(lam - lam_n - curve.betas * trace - tol * lam))
    gaps = lam_d - lam
    shrinking = bool(np.all(np.diff(gaps) < 0))
    passed = lower_gap > 0 and upper_gap > 0 and trace_excess <= 0 and shrinking
    return CheckResult(
        "limits",
        passed,
        min(lower_gap, upper_gap, -trace_excess),
        {"neumann_lambda": lam_n, "dirichlet_lambda": lam_d, "trace_constant": trace,
         "min_gap_neumann": lower_gap, "min_gap_dirichlet": upper_gap,
         "gap_at_beta_min": float(lam[0] - lam_n), "gap_at_beta_max": float(gaps[-1]),
         "dirichlet_gap_shrinking": shrinking},
    )


def boundary_layer_deviation(sol: EigenSolution, t_max: float = 0.01, samples: int = 200) -> float:
    """sup over 0 < t <= t_max of |Psi(1+t) - t|, Psi the boundary rescaling."""
    b = robin_slope(sol.beta, sol.p)
    t = np.geomspace(1e-6 * t_max, t_max, samples)
    phi, _ = resample(sol.trajectory, 1.0 + t)
    psi = (phi - sol.phi_at_1) / (sol.phi_at_1 * b)
    return float(np.max(np.abs(psi - t)))


def check_boundary_layer_rescaling(sol: EigenSolution, t_max: float = 0.01,
                                   reference: EigenSolution | None = None) -> CheckResult:
    """Psi(1+t) = t up to K t^{1+alpha} / beta^{1/(p-1)}, with K and alpha fitted
    from the boundary expansion.  With ``reference`` (a smaller beta) the
    deviation must also have shrunk."""
    name = "boundary_layer_rescaling"
    if sol.beta == 0:
        return CheckResult(name, True, math.inf, {}, "skipped: Neumann case")
    if sol.beta < 10:
        raise VerificationError(f"boundary-layer rescaling needs beta >= 10, got {sol.beta:g}")
    dev = boundary_layer_deviation(sol, t_max)
    exp_check = verify_boundary_expansion(sol)
    K, alpha = exp_check.constants["K"], exp_check.constants["alpha_fit"]
    b = robin_slope(sol.beta, sol.p)
    bound = K * t_max ** (1.0 + alpha) / (sol.phi_at_1 * b) * 1.05 + 1e-12
    consts = {"deviation": dev, "bound": bound, "K": K, "alpha_fit": alpha}
    margin = bound - dev
    passed = dev <= bound
    if reference is not None:
        if not reference.beta < sol.beta:
            raise ValueError("reference solution must have a smaller beta")
        ref_dev = boundary_layer_deviation(reference, t_max)
        consts["reference_deviation"] = ref_dev
        consts["shrink_factor"] = ref_dev / dev if dev > 0 else math.inf
        passed = passed and dev < ref_dev
        margin = min(margin, ref_dev - dev)
    return CheckResult(name, passed, margin, consts)
