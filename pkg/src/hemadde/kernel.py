"""Division-age density and its exponentially weighted transforms.

Every integral the model needs has the form

    int_{tau_min}^{tau_max} w(tau) exp(-s tau) f(tau) dtau

for some smooth weight ``w`` and a (possibly complex) shift ``s``.  They are
all evaluated with composite 8-point Gauss-Legendre rules whose panels
respect the breakpoints of ``f`` and, for oscillatory shifts, the wavelength.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

GL_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
# nodes/weights mapped to [0, 1]
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W

UNIFORM = "uniform"
TABULATED = "tabulated"


@dataclass(frozen=True)
class DivisionDensity:
    """Density of the cell age at division, supported on ``[tau_min, tau_max]``.

    Build instances with :meth:`uniform`, :meth:`tabulated` or
    :meth:`from_csv`.  Tabulated input is piecewise linear between knots and
    is renormalized to unit mass; the mass before normalization is kept in
    ``raw_mass``.
    """

    kind: str
    tau_min: float
    tau_max: float
    knots: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    raw_mass: float = 1.0
    _cum: tuple[float, ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def uniform(cls, tau_min: float, tau_max: float) -> DivisionDensity:
        tau_min, tau_max = float(tau_min), float(tau_max)
        _check_support(tau_min, tau_max)
        return cls(UNIFORM, tau_min, tau_max)

    @classmethod
    def tabulated(cls, knots, values) -> DivisionDensity:
        k = np.asarray(knots, dtype=float)
        v = np.asarray(values, dtype=float)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2:
            raise ValueError("knots and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and nonnegative")
        _check_support(k[0], k[-1])
        mass = float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(k)))
        if mass <= 0:
            raise ValueError("tabulated density has zero mass")
        v = v / mass
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(k))])
        return cls(TABULATED, float(k[0]), float(k[-1]), tuple(k.tolist()),
                   tuple(v.tolist()), mass, tuple(cum.tolist()))

    @classmethod
    def from_csv(cls, path) -> DivisionDensity:
        """Load a two-column ``tau,value`` table; a header row is optional."""
        rows = []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                row = [c.strip() for c in row if c.strip()]
                if not row:
                    continue
                try:
                    tau, val = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if i == 0 and not rows:
                        continue  # header
                    raise ValueError(f"{path}: bad row {i + 1}: {row!r}") from None
                rows.append((tau, val))
        if not rows:
            raise ValueError(f"{path}: no data rows")
        k, v = zip(*rows)
        return cls.tabulated(k, v)

    @property
    def breakpoints(self) -> np.ndarray:
        if self.kind == UNIFORM:
            return np.array([self.tau_min, self.tau_max])
        return np.asarray(self.knots)

    @property
    def width(self) -> float:
        return self.tau_max - self.tau_min

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "tau_min": self.tau_min, "tau_max": self.tau_max}
        if self.kind == TABULATED:
            d["knots"] = list(self.knots)
            d["values"] = list(self.values)
        return d


def _check_support(tau_min, tau_max):
    if not (0.0 <= tau_min < tau_max < math.inf):
        raise ValueError(f"need 0 <= tau_min < tau_max < inf, got [{tau_min}, {tau_max}]")


class KernelMoments(NamedTuple):
    K: float    # int e^{-g t} f
    M1: float   # int t e^{-g t} f
    Y0w: float  # int f (1 - e^{-g t})/g, or int t f when g == 0


def pdf_eval(d: DivisionDensity, tau):
    """Density value f(tau); zero outside the support."""
    tau = np.asarray(tau, dtype=float)
    inside = (tau >= d.tau_min) & (tau <= d.tau_max)
    if d.kind == UNIFORM:
        out = np.where(inside, 1.0 / d.width, 0.0)
    else:
        out = np.where(inside, np.interp(tau, d.knots, d.values), 0.0)
    return out if out.ndim else float(out)


def cdf_eval(d: DivisionDensity, tau):
    tau = np.asarray(tau, dtype=float)
    if d.kind == UNIFORM:
        out = np.clip((tau - d.tau_min) / d.width, 0.0, 1.0)
    else:
        k = np.asarray(d.knots)
        v = np.asarray(d.values)
        c = np.asarray(d._cum)
        t = np.clip(tau, k[0], k[-1])
        i = np.clip(np.searchsorted(k, t, side="right") - 1, 0, k.size - 2)
        dt = t - k[i]
        slope = (v[i + 1] - v[i]) / (k[i + 1] - k[i])
        out = np.minimum(c[i] + v[i] * dt + 0.5 * slope * dt * dt, 1.0)
    return out if out.ndim else float(out)


def hazard_rate(d: DivisionDensity, tau):
    """Division hazard g = f / (1 - F).

    Diverges at ``tau_max``; asking for it there (or beyond) is an error.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau >= d.tau_max):
        raise ValueError(f"hazard rate undefined for tau >= tau_max = {d.tau_max}")
    out = pdf_eval(d, tau) / (1.0 - cdf_eval(d, tau))
    return out


@lru_cache(maxsize=256)
def _rule(d: DivisionDensity, max_width: float, lo: float | None = None,
          hi: float | None = None):
    a = d.tau_min if lo is None else max(lo, d.tau_min)
    b = d.tau_max if hi is None else min(hi, d.tau_max)
    if b <= a:
        return np.empty(0), np.empty(0)
    bps = d.breakpoints
    edges = np.concatenate([[a], bps[(bps > a) & (bps < b)], [b]])
    pieces = []
    for left, right in zip(edges[:-1], edges[1:]):
        m = max(1, math.ceil((right - left) / max_width - 1e-9))
        pieces.append(np.linspace(left, right, m + 1))
    edges = np.unique(np.concatenate(pieces))
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * GL_NODES).ravel()
    weights = (h[:, None] * GL_WEIGHTS).ravel()
    # fold the density into the weights; nodes are interior so f is unambiguous
    weights = weights * pdf_eval(d, nodes)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def quadrature_rule(d: DivisionDensity, max_width: float | None = None,
                    lo: float | None = None, hi: float | None = None):
    """Nodes ``tau_j`` and weights ``w_j f(tau_j)`` over ``[lo, hi] & support``."""
    if max_width is None:
        max_width = d.width / 32
    return _rule(d, float(max_width), lo, hi)


def _panel_width(d, omega_max):
    width = d.width / 32
    if omega_max > 0:
        width = min(width, math.pi / (4.0 * omega_max))
    return width


def transform(d: DivisionDensity, s, weight_power: int = 0):
    """Laplace-type transform ``int tau^p exp(-s tau) f(tau) dtau`` for complex ``s``."""
    s = np.asarray(s, dtype=complex)
    width = _panel_width(d, float(np.max(np.abs(s.imag), initial=0.0)))
    nodes, weights = quadrature_rule(d, width)
    w = weights * nodes**weight_power if weight_power else weights
    out = np.exp(-np.multiply.outer(s, nodes)) @ w
    return out if out.ndim else complex(out)


def weighted_cos_sin(d: DivisionDensity, gamma: float, omega):
    """C(w) = int e^{-g t} f cos(w t) and S(w) = int e^{-g t} f sin(w t)."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be nonnegative")
    L = transform(d, gamma + 1j * omega)
    return np.real(L), -np.imag(L)


def weighted_cos_sin_prime(d: DivisionDensity, gamma: float, omega):
    """Frequency derivatives (C'(w), S'(w)) by differentiating under the integral."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be nonnegative")
    L1 = transform(d, gamma + 1j * omega, weight_power=1)
    # L1 = int t e^{-gt} f (cos wt - i sin wt), so C' = Im(L1) and S' = Re(L1)
    return np.imag(L1), np.real(L1)


def moments(d: DivisionDensity, gamma: float) -> KernelMoments:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    nodes, weights = quadrature_rule(d)
    decay = np.exp(-gamma * nodes)
    K = float(weights @ decay)
    M1 = float(weights @ (nodes * decay))
    if gamma == 0:
        Y0w = float(weights @ nodes)
    else:
        Y0w = float(weights @ (-np.expm1(-gamma * nodes) / gamma))
    return KernelMoments(K, M1, Y0w)


def tail_mass(d: DivisionDensity, gamma: float, t: float) -> float:
    """``int_t^{tau_max} e^{-g tau} f(tau) dtau`` (the not-yet-divided initial cohort)."""
    nodes, weights = quadrature_rule(d, lo=float(t))
    return float(weights @ np.exp(-gamma * nodes))


def decay_weighted_nonincreasing(d: DivisionDensity, gamma: float, num: int = 2001) -> bool:
    """Sampled check that tau -> e^{-g tau} f(tau) does not increase on the support."""
    tau = np.linspace(d.tau_min, d.tau_max, num)
    # stay off the endpoints where f may jump
    tau = tau[1:-1]
    vals = np.exp(-gamma * tau) * pdf_eval(d, tau)
    return bool(np.all(np.diff(vals) <= 1e-12 * np.max(vals)))
