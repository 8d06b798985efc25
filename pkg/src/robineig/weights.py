"""Radial weights g(r) on [1, inf) and their Lorentz-space diagnostics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from .model import ParameterError, check_exponents, sphere_area

R_CUT = 1.0e6


class WeightError(ValueError):
    pass


class WeightKind(str, Enum):
    POWER_LAW = "powerlaw"
    TABULATED = "table"


@dataclass(frozen=True)
class RadialWeight:
    """Positive radial weight.

    ``PowerLaw`` is ``g(r) = amplitude * r**(-decay_rate)``.  ``Tabulated``
    interpolates ``table`` linearly in log-log coordinates and continues
    past the last radius with the power law fitted on the last decade of
    samples; ``amplitude``/``decay_rate`` then hold the fitted bound
    ``g(r) <= C0 r**(-l)``.
    """

    kind: WeightKind
    amplitude: float
    decay_rate: float
    table: tuple[tuple[float, float], ...] | None = None
    _log_r: np.ndarray | None = field(default=None, repr=False, compare=False)
    _log_g: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def power_law(cls, c0: float = 1.0, l: float = 4.0) -> "RadialWeight":
        if not (c0 > 0 and math.isfinite(c0)):
            raise WeightError(f"amplitude c0 must be positive, got {c0}")
        if not math.isfinite(l):
            raise WeightError(f"decay rate must be finite, got {l}")
        return cls(WeightKind.POWER_LAW, float(c0), float(l))

    @classmethod
    def tabulated(cls, radii, values) -> "RadialWeight":
        r = np.asarray(radii, dtype=float)
        g = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != g.shape or r.size < 2:
            raise WeightError("table needs at least two (r, g) rows")
        if abs(r[0] - 1.0) > 1e-12:
            raise WeightError(f"table must start at r = 1.0, got {r[0]}")
        bad = np.nonzero(np.diff(r) <= 0)[0]
        if bad.size:
            raise WeightError(f"radii must be strictly increasing (row {bad[0] + 2})")
        if np.any(~(g > 0)) or not np.all(np.isfinite(g)):
            raise WeightError(f"weight values must be positive (row {int(np.argmax(~(g > 0))) + 1})")
        log_r, log_g = np.log(r), np.log(g)
        tail = r >= r[-1] / 10.0
        if tail.sum() < 2:
            tail = np.zeros_like(tail)
            tail[-2:] = True
        slope = np.polyfit(log_r[tail], log_g[tail], 1)[0]
        l_fit = -float(slope)
        c0 = float(np.max(g * r**l_fit))
        return cls(
            WeightKind.TABULATED,
            c0,
            l_fit,
            tuple(zip(r.tolist(), g.tolist())),
            log_r,
            log_g,
        )

    @classmethod
    def from_csv(cls, path) -> "RadialWeight":
        """Load a two-column ``r,g`` CSV; errors carry file and line."""
        path = Path(path)
        radii, values = [], []
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header] != ["r", "g"]:
                raise WeightError(f"{path}:1: expected header 'r,g'")
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 2:
                    raise WeightError(f"{path}:{lineno}: expected two columns")
                try:
                    r, g = float(row[0]), float(row[1])
                except ValueError:
                    raise WeightError(f"{path}:{lineno}: non-numeric entry {row!r}") from None
                if radii and r <= radii[-1]:
                    raise WeightError(f"{path}:{lineno}: radii must be strictly increasing ({r} after {radii[-1]})")
                if not g > 0:
                    raise WeightError(f"{path}:{lineno}: weight must be positive, got {g}")
                radii.append(r)
                values.append(g)
        if radii and abs(radii[0] - 1.0) > 1e-12:
            raise WeightError(f"{path}:2: first radius must be 1.0, got {radii[0]}")
        try:
            return cls.tabulated(radii, values)
        except WeightError as exc:
            raise WeightError(f"{path}: {exc}") from None

    @property
    def r_last(self) -> float:
        return math.inf if self.table is None else self.table[-1][0]

    def __call__(self, r):
        if self.kind is WeightKind.POWER_LAW:
            out = self.amplitude * np.asarray(r, dtype=float) ** (-self.decay_rate)
            return float(out) if out.ndim == 0 else out
        return self._eval_table(r)

    def scalar(self, r: float) -> float:
        """Fast path for the ODE right-hand side."""
        if self.kind is WeightKind.POWER_LAW:
            return self.amplitude * r ** (-self.decay_rate)
        return float(self._eval_table(r))

    def _eval_table(self, r):
        r_arr = np.asarray(r, dtype=float)
        lr = np.log(r_arr)
        out = np.exp(np.interp(lr, self._log_r, self._log_g))
        beyond = lr > self._log_r[-1]
        if np.any(beyond):
            tail = np.exp(self._log_g[-1] - self.decay_rate * (lr - self._log_r[-1]))
            out = np.where(beyond, tail, out)
        return float(out) if r_arr.ndim == 0 else out

    def is_nonincreasing(self) -> bool:
        if self.kind is WeightKind.POWER_LAW:
            return self.decay_rate >= 0
        return bool(np.all(np.diff(self._log_g) <= 0) and self.decay_rate >= 0)

    def breakpoints(self) -> list[float]:
        return [] if self.table is None else [r for r, _ in self.table]

    def describe(self) -> str:
        if self.kind is WeightKind.POWER_LAW:
            return f"powerlaw:c0={self.amplitude!r},l={self.decay_rate!r}"
        return f"table:{len(self.table)} rows, fitted l={self.decay_rate:.6g}"


def parse_weight(text: str) -> RadialWeight:
    """Parse ``powerlaw:c0=<v>,l=<v>`` or ``table:<path>``."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise WeightError(f"weight spec {text!r} must look like 'powerlaw:c0=1,l=4' or 'table:<path>'")
    kind = kind.strip().lower()
    if kind == "powerlaw":
        params = {}
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            key = key.strip().lower()
            if not eq or key not in ("c0", "l"):
                raise WeightError(f"bad powerlaw field {item!r}; expected c0=<v> and l=<v>")
            if key in params:
                raise WeightError(f"powerlaw field {key!r} given twice")
            try:
                params[key] = float(val)
            except ValueError:
                raise WeightError(f"powerlaw field {key!r} is not a number: {val!r}") from None
        if "l" not in params:
            raise WeightError("powerlaw weight needs l=<v>")
        return RadialWeight.power_law(params.get("c0", 1.0), params["l"])
    if kind == "table":
        if not rest.strip():
            raise WeightError("table weight needs a path: table:<path>")
        try:
            return RadialWeight.from_csv(rest.strip())
        except OSError as exc:
            raise WeightError(f"cannot read weight table: {exc}") from None
    raise WeightError(f"unknown weight kind {kind!r}")


@dataclass(frozen=True)
class WeightDiagnostics:
    lorentz_quasinorm: float
    lebesgue_norm: float
    moment_Ig: float
    cg_constant: float
    admissible_classA: bool
    admissible_finite_moment: bool
    quasinorm_maximizer: float = math.nan

    def to_dict(self) -> dict:
        return {
            "lorentz_quasinorm": self.lorentz_quasinorm,
            "lebesgue_norm": self.lebesgue_norm,
            "moment_Ig": self.moment_Ig,
            "cg_constant": self.cg_constant,
            "admissible_classA": self.admissible_classA,
            "admissible_finite_moment": self.admissible_finite_moment,
            "quasinorm_maximizer": self.quasinorm_maximizer,
        }


def level_radius(t, dim: int):
    """Radius rho with |{1 < |x| < rho}| = t."""
    return (1.0 + dim * np.asarray(t, dtype=float) / sphere_area(dim)) ** (1.0 / dim)


def rearrangement(weight: RadialWeight, dim: int, t):
    """Decreasing rearrangement g*(t) of a non-increasing radial weight.

    For such weights the level set {g > s} is the shell 1 < |x| < rho(s),
    so g*(t) = g(rho) with the shell volume matched to t.
    """
    if not weight.is_nonincreasing():
        raise WeightError("rearrangement of a non-monotone weight is not supported")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise WeightError("rearrangement argument must be non-negative")
    out = weight(level_radius(t_arr, dim))
    return float(out) if t_arr.ndim == 0 else out


def _profile(weight, dim, p, t):
    return t ** (p / dim) * rearrangement(weight, dim, t)


def lorentz_quasinorm(weight: RadialWeight, dim: int, p: float, *, return_details: bool = False):
    """sup_t t**(p/N) g*(t), the weak-L^{N/p} quasinorm.

    Coarse geometric grid over [1e-6, 1e12], then a 200-per-decade grid
    and a bounded scalar search around the best grid point.  Returns inf
    when the grid maximum sits at the right end and still grows there.
    """
    check_exponents(dim, p)
    t = np.logspace(-6, 12, 18 * 20 + 1)
    vals = _profile(weight, dim, p, t)
    i = int(np.argmax(vals))
    last_decade_growth = math.log10(vals[-1] / vals[-21])
    details = {"tail_slope": last_decade_growth, "maximizer": float(t[i])}
    if i >= len(t) - 2 and last_decade_growth > 1e-6:
        value = math.inf
        details["maximizer"] = math.inf
    else:
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
        fine = np.logspace(math.log10(lo), math.log10(hi), 2 * 200 // 20 + 1)
        fv = _profile(weight, dim, p, fine)
        j = int(np.argmax(fv))
        a, b = fine[max(j - 1, 0)], fine[min(j + 1, len(fine) - 1)]
        value, tmax = float(fv[j]), float(fine[j])
        if b > a:
            res = optimize.minimize_scalar(
                lambda u: -_profile(weight, dim, p, math.exp(u)),
                bounds=(math.log(a), math.log(b)),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if -res.fun > value:
                value, tmax = float(-res.fun), float(math.exp(res.x))
        details["maximizer"] = tmax
    return (value, details) if return_details else value


def _radial_integral(func, dim: int, upper: float, breaks=()) -> float:
    """omega-free integral of func(r) r^{N-1} dr over [1, upper], done in log r."""
    pts = sorted(math.log(b) for b in breaks if 1.0 < b < upper)
    nodes = [0.0, *pts, math.log(upper)]
    total = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        val, _ = integrate.quad(
            lambda u: func(math.exp(u)) * math.exp(dim * u),
            a,
            b,
            epsabs=0.0,
            epsrel=1e-13,
            limit=400,
        )
        total += val
    return total


def weighted_moment(weight: RadialWeight, dim: int, r_cut: float = R_CUT) -> float:
    """I_g = int_1^inf r^{N-1} g(r) dr; inf when the decay rate is <= N."""
    l = weight.decay_rate
    if l <= dim:
        return math.inf
    r_cut = max(r_cut, weight.r_last if math.isfinite(weight.r_last) else r_cut)
    body = _radial_integral(weight.scalar, dim, r_cut, weight.breakpoints())
    tail = weight.scalar(r_cut) * r_cut**dim / (l - dim)
    return body + tail


def lebesgue_norm(weight: RadialWeight, dim: int, p: float, r_cut: float = R_CUT) -> float:
    """||g||_{L^{N/p}(B_1^c)}."""
    q = dim / p
    l = weight.decay_rate
    if l * q <= dim:
        return math.inf
    r_cut = max(r_cut, weight.r_last if math.isfinite(weight.r_last) else r_cut)
    body = _radial_integral(lambda r: weight.scalar(r) ** q, dim, r_cut, weight.breakpoints())
    tail = weight.scalar(r_cut) ** q * r_cut**dim / (l * q - dim)
    return (sphere_area(dim) * (body + tail)) ** (1.0 / q)


def diagnostics(weight: RadialWeight, dim: int, p: float) -> WeightDiagnostics:
    check_exponents(dim, p)
    quasi, det = lorentz_quasinorm(weight, dim, p, return_details=True)
    moment = weighted_moment(weight, dim)
    cg = (sphere_area(dim) * moment) ** (-1.0 / p) if math.isfinite(moment) else 0.0
    # Closure in the weak space is not decidable from samples: require a
    # finite sup that decays at the right end of the grid, plus l > p.
    tail_vanishes = det["tail_slope"] < -1e-3
    class_a = bool(math.isfinite(quasi) and tail_vanishes and weight.decay_rate > p)
    return WeightDiagnostics(
        lorentz_quasinorm=quasi,
        lebesgue_norm=lebesgue_norm(weight, dim, p),
        moment_Ig=moment,
        cg_constant=cg,
        admissible_classA=class_a,
        admissible_finite_moment=bool(class_a and weight.decay_rate > dim),
        quasinorm_maximizer=det["maximizer"],
    )


def check_admissible(weight: RadialWeight, dim: int, p: float) -> WeightDiagnostics:
    diag = diagnostics(weight, dim, p)
    if not diag.admissible_classA:
        raise ParameterError(
            f"weight {weight.describe()} is not admissible for N={dim}, p={p} "
            f"(needs decay rate l > p and a vanishing weak-L^(N/p) tail)"
        )
    return diag
