"""Linear stability of the equilibria and location of the Hopf point.

Linearizing the x equation about a constant state with feedback gain b
(b = beta(0) at the trivial state, b = beta* at x*) gives

    Delta(lam) = lam + delta + b - 2 b int e^{-(lam + gamma) tau} f(tau) dtau.

Purely imaginary roots i w of Delta with b = beta* < 0 solve

    g(w) = w (1 - 2 C(w)) / (2 S(w)) = delta,    beta*_c = -delta / (1 - 2 C(w)).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .kernel import decay_weighted_nonincreasing, transform, weighted_cos_sin, weighted_cos_sin_prime
from .model import ModelParams, beta_star_at, existence, positive_equilibrium

# trivial-equilibrium classes
GLOBALLY_STABLE = "GloballyStable"
UNSTABLE = "Unstable"
BOUNDARY = "Boundary"
# positive-equilibrium classes
STABLE_BY_GAIN_BOUND = "StableByGainBound"
STABLE_PRE_HOPF = "StablePreHopf"
HOPF_CRITICAL = "HopfCritical"
UNSTABLE_POST_HOPF = "UnstablePostHopf"
INDETERMINATE = "Indeterminate"

S_FLOOR = 1e-14
DEGENERATE_TOL = 1e-8
# |beta* - beta*_c| treated as "at the bifurcation"; about the beta* change
# produced by rounding n to two decimals near the Hopf point
CRITICAL_TOL = 1e-3


class NoCrossing(RuntimeError):
    """g(w) - delta has no sign change on the scanned range."""


class NoInversion(RuntimeError):
    """No sensitivity n in (1, 10] reproduces the critical gain."""


# -- characteristic functions --------------------------------------------------

def char_trivial(params: ModelParams, lam):
    """Delta_0(lam) for real ``lam``."""
    b0 = float(params.beta(0.0))
    lam = np.asarray(lam, dtype=float)
    L = np.real(transform(params.density, lam + params.gamma))
    out = lam + params.delta + b0 - 2.0 * b0 * L
    return out if out.ndim else float(out)


def char_trivial_classify(params: ModelParams) -> str:
    d0 = char_trivial(params, 0.0)
    if abs(d0) <= 1e-12 * max(1.0, float(params.beta(0.0))):
        return BOUNDARY
    return GLOBALLY_STABLE if d0 > 0 else UNSTABLE


def trivial_real_root(params: ModelParams) -> float:
    """The unique real root of the increasing function Delta_0."""
    f = lambda lam: char_trivial(params, lam)
    f0 = f(0.0)
    if abs(f0) <= 1e-12 * max(1.0, float(params.beta(0.0))):
        return 0.0
    step = 1.0
    if f0 < 0:
        lo, hi = 0.0, step
        while f(hi) < 0:
            lo, hi = hi, 2.0 * hi
    else:
        lo, hi = -step, 0.0
        while f(lo) > 0:
            hi, lo = lo, 2.0 * lo
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500))


def char_nontrivial(params: ModelParams, beta_star: float, lam):
    """Delta(lam) for complex ``lam``."""
    lam = np.asarray(lam, dtype=complex)
    L = transform(params.density, lam + params.gamma)
    out = lam + params.delta + beta_star - 2.0 * beta_star * L
    return out if out.ndim else complex(out)


def char_nontrivial_prime(params: ModelParams, beta_star: float, lam):
    lam = np.asarray(lam, dtype=complex)
    L1 = transform(params.density, lam + params.gamma, weight_power=1)
    out = np.asarray(1.0 + 2.0 * beta_star * L1)
    return out if out.ndim else complex(out)


def g_of_omega(params: ModelParams, omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be > 0")
    C, S = weighted_cos_sin(params.density, params.gamma, omega)
    if np.any(np.abs(S) < S_FLOOR):
        raise ZeroDivisionError("S(omega) vanishes; g is undefined there")
    out = omega * (1.0 - 2.0 * C) / (2.0 * S)
    return out if out.ndim else float(out)


def g_prime(params: ModelParams, omega: float) -> float:
    C, S = weighted_cos_sin(params.density, params.gamma, omega)
    Cp, Sp = weighted_cos_sin_prime(params.density, params.gamma, omega)
    g = omega * (1.0 - 2.0 * C) / (2.0 * S)
    s_over_w_prime = (Sp * omega - S) / omega**2
    return float(-(omega / S) * (g * s_over_w_prime + Cp))


def transversality(params: ModelParams, omega: float) -> float:
    """-C'(w) - delta (S(w)/w)'; its sign is that of dRe(lam)/d(-beta*) at the crossing."""
    C, S = weighted_cos_sin(params.density, params.gamma, omega)
    Cp, Sp = weighted_cos_sin_prime(params.density, params.gamma, omega)
    return float(-Cp - params.delta * (Sp * omega - S) / omega**2)


# -- Hopf location -------------------------------------------------------------

@dataclass
class CrossingCandidate:
    omega: float
    C: float
    S: float
    beta_star_c: float
    g_prime: float


@dataclass
class HopfResult:
    candidates: list[CrossingCandidate]
    selected: CrossingCandidate
    beta_star_c: float
    omega_c: float
    period: float
    n_c: float | None
    transversal: float
    degenerate: bool
    tie: bool = False
    outside_proved_regime: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["transversal_sign"] = int(np.sign(self.transversal))
        return d


def _scan_roots(params: ModelParams, omega_max: float, grid: int):
    w = np.linspace(1e-6, omega_max, grid)
    C = np.empty_like(w)
    S = np.empty_like(w)
    for i in range(0, w.size, 1000):
        C[i:i + 1000], S[i:i + 1000] = weighted_cos_sin(params.density, params.gamma, w[i:i + 1000])
    ok = np.abs(S) >= S_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        gv = np.where(ok, w * (1.0 - 2.0 * C) / (2.0 * S), np.nan) - params.delta
    brackets = []
    for i in range(w.size - 1):
        a, b = gv[i], gv[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        # a sign flip of S is a pole of g, not a crossing
        if np.sign(S[i]) != np.sign(S[i + 1]):
            continue
        if a == 0.0 or a * b < 0:
            brackets.append((w[i], w[i + 1]))
    finite = gv[np.isfinite(gv)] + params.delta
    g_range = (float(finite.min()), float(finite.max())) if finite.size else (math.nan, math.nan)
    return brackets, g_range


def beta_star_of_n(params: ModelParams, n: float) -> float:
    eq = positive_equilibrium(params.with_values(n=n))
    if eq is None:
        raise ValueError("no positive equilibrium")
    return eq.beta_star


def invert_n(params: ModelParams, beta_star_c: float, n_lo: float = 1.0, n_hi: float = 10.0) -> float:
    """Smallest n in (n_lo, n_hi] with beta*(n) = beta_star_c."""
    ns = np.linspace(n_lo + 1e-6, n_hi, 901)
    vals = np.array([beta_star_of_n(params, n) - beta_star_c for n in ns])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if idx.size == 0:
        raise NoInversion(f"beta*(n) - beta*_c keeps sign on ({n_lo}, {n_hi}]")
    i = idx[0]
    return float(brentq(lambda n: beta_star_of_n(params, n) - beta_star_c, ns[i], ns[i + 1],
                        xtol=1e-13, rtol=1e-13))


def hopf_locate(params: ModelParams, omega_max: float | None = None, grid: int = 20000) -> HopfResult:
    if not existence(params).exists_positive:
        raise ValueError("positive equilibrium does not exist; no Hopf analysis")
    d = params.density
    notes = []
    if not decay_weighted_nonincreasing(d, params.gamma):
        warnings.warn("tau -> e^{-gamma tau} f(tau) is not non-increasing; "
                      "crossing existence is not guaranteed", RuntimeWarning, stacklevel=2)
        notes.append("kernel not monotone")
    if omega_max is None:
        omega_max = 40.0 * 2.0 * math.pi / d.tau_max
    brackets, g_range = _scan_roots(params, omega_max, grid)
    if not brackets:
        omega_max *= 2.0
        brackets, g_range = _scan_roots(params, omega_max, 2 * grid)
        notes.append(f"rescanned up to omega={omega_max:g}")
    if not brackets:
        raise NoCrossing(f"g(omega) - delta has no sign change on (0, {omega_max:g}]; "
                         f"g range {g_range}")

    gfun = lambda w: g_of_omega(params, w) - params.delta
    cands = []
    for a, b in brackets:
        w = float(brentq(gfun, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps))
        C, S = (float(v) for v in weighted_cos_sin(d, params.gamma, w))
        if S <= 0 or 1.0 - 2.0 * C <= 0:
            continue
        cands.append(CrossingCandidate(w, C, S, -params.delta / (1.0 - 2.0 * C), g_prime(params, w)))
    if not cands:
        raise NoCrossing("all sign changes rejected (S <= 0 or 1 - 2C <= 0)")

    cmin = min(c.C for c in cands)
    ties = [c for c in cands if abs(c.C - cmin) <= 1e-12]
    sel = min(ties, key=lambda c: c.omega)
    if len(ties) > 1:
        notes.append("several crossings share the minimal C; took smallest omega")
    trans = transversality(params, sel.omega)
    try:
        n_c = invert_n(params, sel.beta_star_c)
    except NoInversion as exc:
        n_c = None
        notes.append(f"NoInversion: {exc}")
    return HopfResult(cands, sel, sel.beta_star_c, sel.omega, 2.0 * math.pi / sel.omega, n_c,
                      trans, abs(trans) < DEGENERATE_TOL, len(ties) > 1,
                      d.tau_min > 0, notes)


# -- classification ------------------------------------------------------------

@dataclass
class StabilityReport:
    trivial: str
    positive: str | None
    delta_tilde: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def delta_tilde(params: ModelParams) -> float:
    return -params.delta / (2.0 * params.moments.K + 1.0)


def classify_positive(params: ModelParams, hopf: HopfResult | None = None,
                      critical_tol: float = CRITICAL_TOL) -> str:
    eq = positive_equilibrium(params)
    if eq is None:
        raise ValueError("positive equilibrium does not exist")
    if eq.beta_star >= delta_tilde(params):
        return STABLE_BY_GAIN_BOUND
    if hopf is None:
        hopf = hopf_locate(params)
    if hopf.degenerate:
        return INDETERMINATE
    if abs(eq.beta_star - hopf.beta_star_c) <= critical_tol:
        return HOPF_CRITICAL
    return STABLE_PRE_HOPF if eq.beta_star > hopf.beta_star_c else UNSTABLE_POST_HOPF


def stability_report(params: ModelParams, critical_tol: float = CRITICAL_TOL) -> StabilityReport:
    dt = delta_tilde(params)
    details = {"alpha": existence(params).threshold_alpha,
               "Delta0_at_0": char_trivial(params, 0.0),
               "trivial_real_root": trivial_real_root(params)}
    eq = positive_equilibrium(params)
    positive = None
    if eq is not None:
        details["beta_star"] = eq.beta_star
        details["x_star"] = eq.x_star
        hopf = None
        if eq.beta_star < dt:
            hopf = hopf_locate(params)
            details["beta_star_c"] = hopf.beta_star_c
            details["omega_c"] = hopf.omega_c
            details["n_c"] = hopf.n_c
        positive = classify_positive(params, hopf, critical_tol)
    return StabilityReport(char_trivial_classify(params), positive, dt, details)


# -- root probe ----------------------------------------------------------------

def newton_polish(params: ModelParams, beta_star: float, lam0: complex, tol: float = 1e-13,
                  maxiter: int = 60) -> tuple[complex, float]:
    lam = complex(lam0)
    for _ in range(maxiter):
        D = char_nontrivial(params, beta_star, lam)
        step = D / char_nontrivial_prime(params, beta_star, lam)
        lam -= step
        if abs(step) < tol * max(1.0, abs(lam)):
            break
    return lam, abs(char_nontrivial(params, beta_star, lam))


def spectral_abscissa_probe(params: ModelParams, beta_star: float,
                            box=(-1.0, 0.5, -3.0, 3.0), grid=(61, 121),
                            residual_tol: float = 1e-9) -> list[complex]:
    """Roots of Delta inside ``box = (re_lo, re_hi, im_lo, im_hi)``.

    Local minima of |Delta| on a grid are polished by Newton's method;
    returns roots sorted by decreasing real part.
    """
    re_lo, re_hi, im_lo, im_hi = box
    re = np.linspace(re_lo, re_hi, grid[0])
    im = np.linspace(im_lo, im_hi, grid[1])
    Z = re[:, None] + 1j * im[None, :]
    A = np.abs(char_nontrivial(params, beta_star, Z.ravel())).reshape(Z.shape)
    P = np.pad(A, 1, constant_values=np.inf)
    core = P[1:-1, 1:-1]
    is_min = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= core <= P[1 + di:P.shape[0] - 1 + di, 1 + dj:P.shape[1] - 1 + dj]
    roots: list[complex] = []
    dre = (re_hi - re_lo) / max(1, grid[0] - 1)
    dim = (im_hi - im_lo) / max(1, grid[1] - 1)
    for i, j in zip(*np.nonzero(is_min)):
        lam, res = newton_polish(params, beta_star, Z[i, j])
        if not np.isfinite(res) or res >= residual_tol:
            continue
        if not (re_lo - dre <= lam.real <= re_hi + dre and im_lo - dim <= lam.imag <= im_hi + dim):
            continue
        if any(abs(lam - r) < 1e-7 for r in roots):
            continue
        roots.append(lam)
    return sorted(roots, key=lambda z: (-z.real, z.imag))


# a root with |Re| below this is read as lying on the imaginary axis; matches
# the real-part drift caused by a beta* offset of CRITICAL_TOL near the crossing
AXIS_TOL = 1e-3


def probe_verdict(roots: list[complex], axis_tol: float = AXIS_TOL) -> str:
    """Map the rightmost probed root onto the positive-equilibrium classes."""
    if not roots:
        return INDETERMINATE
    a = max(r.real for r in roots)
    if abs(a) <= axis_tol:
        return HOPF_CRITICAL
    return UNSTABLE_POST_HOPF if a > 0 else STABLE_PRE_HOPF
