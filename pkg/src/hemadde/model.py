"""Model parameters, the Hill reintroduction rate and the equilibria."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .kernel import DivisionDensity, KernelMoments, moments

TRIVIAL = "trivial"
POSITIVE = "positive"

# tolerance for the existence threshold equality delta == alpha
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class HillRate:
    """beta(x) = beta0 theta^n / (theta^n + x^n)."""

    beta0: float = 1.77
    theta: float = 1.0
    n: float = 3.0

    def __post_init__(self):
        for name in ("beta0", "theta", "n"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"HillRate.{name} must be finite and > 0, got {v}")


def beta_eval(h: HillRate, x):
    # written in ratio form so that huge theta does not overflow
    return h.beta0 / (1.0 + (x / h.theta) ** h.n)


def beta_prime(h: HillRate, x):
    r = x / h.theta
    rn = r**h.n
    if h.n == 1:
        return -h.beta0 / (h.theta * (1.0 + rn) ** 2)
    return -h.beta0 * h.n * r ** (h.n - 1) / (h.theta * (1.0 + rn) ** 2)


def map_unimodal_peak(h: HillRate) -> float:
    """Argmax of x -> x beta(x); only exists for n > 1."""
    if h.n <= 1:
        raise ValueError("x*beta(x) is monotone for n <= 1; no interior peak")
    return h.theta / (h.n - 1.0) ** (1.0 / h.n)


@dataclass(frozen=True)
class ModelParams:
    delta: float = 0.05
    gamma: float = 0.2
    hill: HillRate = field(default_factory=HillRate)
    density: DivisionDensity = field(default_factory=lambda: DivisionDensity.uniform(0.0, 7.0))

    def __post_init__(self):
        for name in ("delta", "gamma"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @property
    def moments(self) -> KernelMoments:
        return moments(self.density, self.gamma)

    def beta(self, x):
        return beta_eval(self.hill, x)

    def with_values(self, **kw) -> ModelParams:
        """Copy with any of delta, gamma, beta0, theta, n replaced."""
        hill_kw = {k: kw.pop(k) for k in ("beta0", "theta", "n") if k in kw}
        p = replace(self, **kw)
        if hill_kw:
            p = replace(p, hill=replace(p.hill, **hill_kw))
        return p

    def to_dict(self) -> dict:
        return {"delta": self.delta, "gamma": self.gamma, "beta0": self.hill.beta0,
                "theta": self.hill.theta, "n": self.hill.n,
                "density": self.density.to_dict()}

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> ModelParams:
        known = {"delta", "gamma", "beta0", "theta", "n", "density"}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown parameter key(s): {sorted(unknown)}")
        dens = d.get("density")
        if dens is None:
            density = DivisionDensity.uniform(0.0, 7.0)
        else:
            density = density_from_dict(dens, base_dir)
        hill = HillRate(beta0=float(d.get("beta0", 1.77)), theta=float(d.get("theta", 1.0)),
                        n=float(d.get("n", 3.0)))
        return cls(delta=float(d.get("delta", 0.05)), gamma=float(d.get("gamma", 0.2)),
                   hill=hill, density=density)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str, base_dir=None) -> ModelParams:
        return cls.from_dict(json.loads(text), base_dir)


def density_from_dict(d: dict, base_dir=None) -> DivisionDensity:
    kind = str(d.get("kind", "uniform")).lower()
    if kind == "uniform":
        return DivisionDensity.uniform(float(d.get("tau_min", 0.0)), float(d.get("tau_max", 7.0)))
    if kind == "tabulated":
        if "csv_path" in d:
            path = Path(d["csv_path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return DivisionDensity.from_csv(path)
        if "knots" in d and "values" in d:
            return DivisionDensity.tabulated(d["knots"], d["values"])
        raise KeyError("tabulated density needs 'csv_path' or 'knots'/'values'")
    raise ValueError(f"unknown density kind {kind!r}")


@dataclass(frozen=True)
class ExistenceReport:
    threshold_alpha: float
    exists_positive: bool
    boundary: bool


@dataclass(frozen=True)
class Equilibrium:
    x_star: float
    y_star: float
    beta_star: float
    kind: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "x_star": self.x_star, "y_star": self.y_star,
                "beta_star": self.beta_star}


def existence(params: ModelParams) -> ExistenceReport:
    K = params.moments.K
    alpha = (2.0 * K - 1.0) * params.beta(0.0)
    boundary = abs(alpha - params.delta) <= BOUNDARY_TOL * max(1.0, abs(alpha))
    exists = (0.0 < params.delta < alpha) and not boundary
    return ExistenceReport(alpha, exists, boundary)


def beta_star_at(params: ModelParams, x: float) -> float:
    """Slope of x -> x beta(x): the linear feedback gain at x."""
    return float(params.beta(x) + x * beta_prime(params.hill, x))


def positive_root_bisect(params: ModelParams, tol: float = 1e-15) -> float:
    """Root of (2K - 1) beta(x) - delta by bisection; works for any decreasing beta."""
    K = params.moments.K
    F = lambda x: (2.0 * K - 1.0) * params.beta(x) - params.delta
    lo, hi = 0.0, params.hill.theta
    if F(lo) <= 0:
        raise ValueError("no positive equilibrium")
    while F(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("bracket expansion failed")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if F(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def equilibria(params: ModelParams) -> list[Equilibrium]:
    """E0 always; E* when it exists, from the closed form for Hill beta."""
    out = [Equilibrium(0.0, 0.0, float(params.beta(0.0)), TRIVIAL)]
    if not existence(params).exists_positive:
        return out
    mom = params.moments
    h = params.hill
    x = h.theta * ((2.0 * mom.K - 1.0) * h.beta0 / params.delta - 1.0) ** (1.0 / h.n)
    bx = float(params.beta(x))
    out.append(Equilibrium(float(x), bx * x * mom.Y0w, beta_star_at(params, x), POSITIVE))
    return out


def positive_equilibrium(params: ModelParams) -> Equilibrium | None:
    eqs = equilibria(params)
    return eqs[1] if len(eqs) > 1 else None


def explosion_predicted(params: ModelParams, mu: float) -> bool:
    if params.delta != 0 or params.hill.n <= 1:
        return False
    return params.moments.K > 0.5 and mu >= map_unimodal_peak(params.hill)


def boundedness_bound(params: ModelParams) -> tuple[float, float]:
    """(x0, x1) such that solutions with delta > 0 eventually stay below max(history, x1).

    x0 solves 2K beta(x0) = delta (x0 = 0 when 2K beta(0) < delta) and
    x1 = 2K beta(0) x0 / delta.
    """
    if params.delta <= 0:
        raise ValueError("bound requires delta > 0")
    K = params.moments.K
    h = params.hill
    ratio = 2.0 * K * h.beta0 / params.delta
    x0 = h.theta * (ratio - 1.0) ** (1.0 / h.n) if ratio > 1.0 else 0.0
    return x0, 2.0 * K * h.beta0 * x0 / params.delta
