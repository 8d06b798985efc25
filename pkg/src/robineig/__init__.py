"""Principal eigenpairs of the weighted radial Robin p-Laplacian on the
exterior of the unit ball, with numerical certificates of their properties."""
from .estimator import RobinEigensolver, check_radii
from .model import EnvelopeParams, ParameterError, ProblemSpec, decay_exponents, robin_slope, sphere_area
from .oracle import closed_form_oracle, oracle_profile, oracle_root
from .solver import (
    BoundaryKind,
    EigenSolution,
    SolverConfig,
    SolverError,
    solve,
    solve_dirichlet,
    solve_neumann,
    solve_principal,
)
from .sweep import SweepCurve, sweep
from .variational import variational_crosscheck
from .verify import CheckResult, VerificationReport, verify_all
from .weights import RadialWeight, diagnostics, parse_weight

__version__ = "0.1.0"

__all__ = [
    "BoundaryKind",
    "CheckResult",
    "EigenSolution",
    "EnvelopeParams",
    "ParameterError",
    "ProblemSpec",
    "RadialWeight",
    "RobinEigensolver",
    "SolverConfig",
    "SolverError",
    "SweepCurve",
    "VerificationReport",
    "check_radii",
    "closed_form_oracle",
    "decay_exponents",
    "diagnostics",
    "oracle_profile",
    "oracle_root",
    "parse_weight",
    "robin_slope",
    "solve",
    "solve_dirichlet",
    "solve_neumann",
    "solve_principal",
    "sphere_area",
    "sweep",
    "variational_crosscheck",
    "verify_all",
]
