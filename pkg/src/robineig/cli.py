"""Command-line front end.

    robineig solve  --n 3 --p 2 --beta 1 --weight powerlaw:c0=1,l=4 --out sol.json
    robineig verify --n 3 --p 2 --beta 1 --weight powerlaw:c0=1,l=4 --report report.json
    robineig sweep  --n 3 --p 2 --weight powerlaw:c0=1,l=4 --beta-min 0.01 --beta-max 100 --points 25 --log --out curve.csv
    robineig oracle --beta 1

Flags override values from ``--config``, a flat JSON object keyed by the
long flag names (dashes or underscores).  Exit status: 0 when every
requested check passed, 1 on failed checks or solver errors, 2 on bad
input, 3 when a hard check failed.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .model import EnvelopeParams, ParameterError, ProblemSpec, check_exponents
from .oracle import ORACLE_DIM, ORACLE_P, closed_form_oracle
from .solver import BoundaryKind, EigenSolution, SolverConfig, SolverError, solve
from .sweep import (
    SweepCurve,
    check_derivative_formula,
    check_limits,
    check_monotone_concave,
    check_rstar_increasing,
    log_grid,
    sweep,
    write_curve_csv,
)
from .verify import VerificationReport, envelope_params, envelopes, json_safe, verify_all, verify_unified_envelope
from .weights import WeightError, diagnostics, parse_weight

log = logging.getLogger("robineig")

EXIT_OK, EXIT_CHECKS, EXIT_USAGE, EXIT_HARD = 0, 1, 2, 3
COMMANDS = ("solve", "sweep", "verify", "oracle")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    p: float | None = None
    beta: float | None = None
    weight: str | None = None
    rmax: float = 400.0
    tol: float = 1e-10
    lambda_tol: float = 1e-8
    beta_min: float = 0.01
    beta_max: float = 100.0
    points: int = 25
    log: bool = False
    gamma: float = 2.0
    delta: float | None = None
    out: str | None = None
    report: str | None = None
    plot_data: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command == "oracle":
            if self.beta is not None and not self.beta >= 0:
                raise ConfigError("--beta must be >= 0")
            return
        required = ["n", "p", "weight"] + (["beta"] if self.command != "sweep" else [])
        missing = [f"--{k.replace('_', '-')}" for k in required if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"missing required field(s): {', '.join(missing)}")
        try:
            check_exponents(self.n, self.p)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        if self.beta is not None and not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ConfigError("--beta must be finite and >= 0")
        if not self.rmax >= 16:
            raise ConfigError("--rmax must be at least 16")
        if not (self.tol > 0 and self.lambda_tol > 0):
            raise ConfigError("--tol and --lambda-tol must be positive")
        if self.points < 1:
            raise ConfigError("--points must be >= 1")
        if not 0 < self.beta_min <= self.beta_max:
            raise ConfigError("need 0 < --beta-min <= --beta-max")
        if not self.gamma >= 2:
            raise ConfigError("--gamma must be >= 2")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("--delta must be positive")
        for name in ("out", "report", "plot_data"):
            path = getattr(self, name)
            if path is not None:
                parent = Path(path).resolve().parent
                if not parent.is_dir() or not os.access(parent, os.W_OK):
                    raise ConfigError(f"--{name.replace('_', '-')}: directory {parent} is not writable")
        self.weight_obj()

    def weight_obj(self):
        try:
            return parse_weight(self.weight)
        except (WeightError, OSError) as exc:
            raise ConfigError(f"--weight: {exc}") from None

    def spec(self, beta: float | None = None) -> ProblemSpec:
        return ProblemSpec(int(self.n), float(self.p), float(self.beta if beta is None else beta), self.weight_obj())

    def solver_config(self) -> SolverConfig:
        return SolverConfig.geometric(self.rmax / 4.0, 3, lambda_tol=self.lambda_tol, ode_tol=self.tol)


_FIELD_TYPES = {"n": int, "p": float, "beta": float, "weight": str, "rmax": float, "tol": float,
                "lambda_tol": float, "beta_min": float, "beta_max": float, "points": int, "log": bool,
                "gamma": float, "delta": float, "out": str, "report": str, "plot_data": str}


def load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"--config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config {path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"--config {path}: expected a flat JSON object")
    out = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in _FIELD_TYPES:
            raise ConfigError(f"--config {path}: unknown key {key!r}")
        if isinstance(value, (dict, list)):
            raise ConfigError(f"--config {path}: key {key!r} must be a scalar")
        kind = _FIELD_TYPES[name]
        if kind is bool and not isinstance(value, bool):
            raise ConfigError(f"--config {path}: key {key!r} must be true or false")
        try:
            out[name] = value if value is None else kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"--config {path}: key {key!r} has invalid value {value!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("problem")
    g.add_argument("--n", type=int, help="space dimension N")
    g.add_argument("--p", type=float, help="exponent 1 < p < N")
    g.add_argument("--beta", type=float, help="Robin parameter (0 = Neumann)")
    g.add_argument("--weight", help="powerlaw:c0=<v>,l=<v> or table:<csv path>")
    s = common.add_argument_group("solver")
    s.add_argument("--rmax", type=float, help="largest truncation radius (default 400)")
    s.add_argument("--tol", type=float, help="ODE tolerance (default 1e-10)")
    s.add_argument("--lambda-tol", type=float, help="relative bisection tolerance (default 1e-8)")
    w = common.add_argument_group("sweep")
    w.add_argument("--beta-min", type=float)
    w.add_argument("--beta-max", type=float)
    w.add_argument("--points", type=int)
    w.add_argument("--log", action="store_const", const=True, default=None, help="log-spaced beta grid")
    e = common.add_argument_group("envelope")
    e.add_argument("--gamma", type=float, help="transition exponent, >= 2 (default 2)")
    e.add_argument("--delta", type=float, help="override the modulation width")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="solution JSON (solve/verify/oracle) or curve CSV (sweep)")
    o.add_argument("--report", help="check report JSON")
    o.add_argument("--plot-data", help="whitespace columns for plotting")
    common.add_argument("--config", help="flat JSON file with default values")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="robineig", description="Weighted radial Robin p-Laplacian eigensolver")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="principal eigenpair")
    sub.add_parser("sweep", parents=[common], help="eigenvalue curve over beta")
    sub.add_parser("verify", parents=[common], help="solve and run every check")
    sub.add_parser("oracle", parents=[common], help="closed-form values for N=3, p=2, g=r^-4")
    return parser


def parse_args(argv=None) -> tuple[RunConfig, bool]:
    """(validated config, verbose flag); raises ConfigError on bad input."""
    ns = build_parser().parse_args(argv)
    values = load_config_file(ns.config) if ns.config else {}
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        v = getattr(ns, f.name, None)
        if v is not None:
            values[f.name] = v
    values = {k: v for k, v in values.items() if v is not None}
    cfg = RunConfig(command=ns.command, **values)
    cfg.validate()
    return cfg, ns.verbose


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.resolve().parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def solution_to_dict(sol: EigenSolution, checks: VerificationReport | None = None) -> dict:
    traj = sol.trajectory
    out = {
        "lambda1": sol.lambda1,
        "bracket": list(sol.bracket),
        "phi1": sol.phi_at_1,
        "rstar": sol.r_star,
        "R_max": sol.R_max_used,
        "boundary_kind": sol.boundary_kind.value,
        "problem": {"n": sol.dim, "p": sol.p, "beta": sol.beta, "weight": sol.weight.describe()},
        "nodes": [
            {"r": float(r), "phi": float(phi), "dphi": float(d), "F": float(F)}
            for r, phi, d, F in zip(traj.r, traj.phi, traj.dphi, traj.flux)
        ],
    }
    if checks is not None:
        out["checks"] = checks.to_list()
    return out


def _plot_lines(header, columns) -> str:
    lines = ["# " + " ".join(header)]
    for row in zip(*columns):
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def emit_plot_data(obj, path: str, gamma: float = 2.0, params: EnvelopeParams | None = None) -> None:
    """Whitespace columns: (r, phi, phi', g_L, g_U) for a solution or
    (beta, lambda1, lambda_N, lambda_D, trace_bound) for a curve."""
    if isinstance(obj, SweepCurve):
        n = len(obj)
        trace = obj.neumann_lambda + obj.betas * obj.trace_constant
        text = _plot_lines(
            ("beta", "lambda1", "lambda_neumann", "lambda_dirichlet", "trace_bound"),
            (obj.betas, obj.lambdas, np.full(n, obj.neumann_lambda), np.full(n, obj.dirichlet_lambda), trace),
        )
    else:
        traj = obj.trajectory
        if obj.boundary_kind is BoundaryKind.ROBIN and obj.r_star > 1:
            params = params or envelope_params(obj, gamma)
            g_lo, g_hi = envelopes(traj.r, obj, params)
        else:
            g_lo = g_hi = np.full(len(traj.r), math.nan)
        text = _plot_lines(("r", "phi", "dphi", "g_L", "g_U"), (traj.r, traj.phi, traj.dphi, g_lo, g_hi))
    write_atomic(path, text)


def _envelope(cfg: RunConfig, sol: EigenSolution) -> EnvelopeParams | None:
    if cfg.delta is None or sol.boundary_kind is not BoundaryKind.ROBIN:
        return None
    base = envelope_params(sol, cfg.gamma)
    return EnvelopeParams(cfg.gamma, cfg.delta, base.length_scale, base.r_star)


def _solve(cfg: RunConfig) -> EigenSolution:
    kind = BoundaryKind.ROBIN if cfg.beta > 0 else BoundaryKind.NEUMANN
    return solve(cfg.spec(), kind, cfg.solver_config())


def cmd_solve(cfg: RunConfig) -> int:
    sol = _solve(cfg)
    _emit(cfg.out, dumps(solution_to_dict(sol)))
    if cfg.plot_data:
        emit_plot_data(sol, cfg.plot_data, cfg.gamma, _envelope(cfg, sol))
    log.info("lambda1 = %.12g", sol.lambda1)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    sol = _solve(cfg)
    diag = diagnostics(sol.weight, sol.dim, sol.p)
    report = verify_all(sol, diag, gamma=cfg.gamma)
    params = _envelope(cfg, sol)
    if params is not None and 0.1 <= sol.beta <= 10:
        checks = tuple(verify_unified_envelope(sol, params) if c.name == "unified_envelope" else c for c in report)
        report = VerificationReport(checks)
    doc = {
        "lambda1": sol.lambda1,
        "problem": {"n": sol.dim, "p": sol.p, "beta": sol.beta, "weight": sol.weight.describe()},
        "weight_diagnostics": {k: json_safe(v) for k, v in diag.to_dict().items()},
        "checks": report.to_list(),
        "all_passed": report.all_passed,
    }
    text = dumps(doc)
    if cfg.report or not cfg.out:
        _emit(cfg.report, text)
    if cfg.out:
        write_atomic(cfg.out, dumps(solution_to_dict(sol, report)))
    if cfg.plot_data:
        emit_plot_data(sol, cfg.plot_data, cfg.gamma, params)
    for c in report:
        log.info("%-30s %s margin=%s", c.name, "PASS" if c.passed else "FAIL", json_safe(c.margin))
    if report.hard_failures:
        print(f"error: hard check(s) failed: {', '.join(report.hard_failures)}", file=sys.stderr)
        return EXIT_HARD
    return EXIT_OK if report.all_passed else EXIT_CHECKS


def cmd_sweep(cfg: RunConfig) -> int:
    betas = log_grid(cfg.beta_min, cfg.beta_max, cfg.points, cfg.log)
    spec = cfg.spec(beta=float(betas[0]))
    curve = sweep(spec, betas, cfg.solver_config())
    checks = [check_monotone_concave(curve)] if len(curve) >= 2 else []
    if len(curve) >= 2:
        checks.append(check_rstar_increasing(curve))
    if len(curve) >= 3:
        checks.append(check_derivative_formula(curve))
    if math.log10(cfg.beta_max / cfg.beta_min) >= 4 - 1e-9:
        checks.append(check_limits(curve))
    buf = io.StringIO()
    write_curve_csv(curve, buf)
    _emit(cfg.out, buf.getvalue())
    if cfg.report:
        write_atomic(cfg.report, dumps({"checks": [c.to_dict() for c in checks],
                                        "all_passed": all(c.passed for c in checks)}))
    if cfg.plot_data:
        emit_plot_data(curve, cfg.plot_data)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECKS


def cmd_oracle(cfg: RunConfig) -> int:
    beta = 1.0 if cfg.beta is None else cfg.beta
    vals = closed_form_oracle(beta)
    doc = {"n": ORACLE_DIM, "p": ORACLE_P, "weight": "powerlaw:c0=1,l=4", "beta": beta, **vals._asdict()}
    if cfg.out:
        write_atomic(cfg.out, dumps(doc))
    for key in ("lambda1", "r_star", "phi_at_1", "dlambda_dbeta"):
        print(f"{key} = {doc[key]:.10g}")
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify, "oracle": cmd_oracle}


def main(argv=None) -> int:
    try:
        cfg, verbose = parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse already printed its message
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return HANDLERS[cfg.command](cfg)
    except (SolverError, ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECKS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECKS


if __name__ == "__main__":
    sys.exit(main())
