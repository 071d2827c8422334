"""Fixed-step integration of the distributed-delay system.

    x' = -(delta + beta(x)) x + 2 I(t)
    y' = -gamma y + beta(x) x - I(t)
    I(t) = int_{tau_min}^{tau_max} e^{-gamma tau} f(tau) beta(x(t - tau)) x(t - tau) dtau

The step ``h`` divides both ``tau_min`` and ``tau_max``, so at the three
Runge-Kutta stage offsets (0, h/2, h) the window ``[t - tau_max, t - tau_min]``
is a union of whole steps and half steps of the stored solution.  For each
accepted step we store the flux ``beta(x) x`` at 8 Gauss-Legendre nodes on the
full step and on each half; ``I`` at any stage time is then a dot product of
those tables with fixed weight vectors.

When ``tau_min == 0`` the window reaches into the step being computed.  That
piece is read from a provisional Hermite extension of the current step
(extrapolated from the previous one) and refined by a few fixed-point
sweeps over the step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import GL_NODES, GL_WEIGHTS, DivisionDensity, pdf_eval
from .model import ModelParams
from .trajectory import CoverageError, Trajectory, hermite_basis

_THETA_FULL = GL_NODES
_THETA_LO = 0.5 * GL_NODES
_THETA_HI = 0.5 + 0.5 * GL_NODES
_B24 = hermite_basis(np.concatenate([_THETA_FULL, _THETA_LO, _THETA_HI]))
_B_LO_FULL = _B24[:16]  # rows: full nodes then lo nodes


class NumericalError(RuntimeError):
    """The state became non-finite."""


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float = 1000.0
    step: float = 0.01
    correction_passes: int = 2

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if self.correction_passes < 1:
            raise ValueError("correction_passes must be >= 1")


def aligned_step(d: DivisionDensity, step: float) -> float:
    """Largest step <= ``step`` that divides ``tau_max`` (and ``tau_min``).

    Raises ValueError when no such step divides ``tau_min`` too.
    """
    m = max(1, math.ceil(d.tau_max / step - 1e-9))
    h = d.tau_max / m
    L = d.tau_min / h
    if abs(L - round(L)) > 1e-6:
        raise ValueError(
            f"step {h:g} (aligned to tau_max={d.tau_max:g}) does not divide tau_min={d.tau_min:g}")
    return h


def flux(params: ModelParams, x):
    """beta(x) x, with beta evaluated at max(x, 0) to stay real."""
    h = params.hill
    xp = np.maximum(x, 0.0)
    return h.beta0 / (1.0 + (xp / h.theta) ** h.n) * x


class DelayRK4:
    """Classical RK4 with cubic-Hermite dense output for the delay system."""

    def __init__(self, params: ModelParams, step: float, correction_passes: int = 2):
        d = params.density
        self.params = params
        self.h = h = aligned_step(d, step)
        self.N = N = round(d.tau_max / h)
        self.L = L = round(d.tau_min / h)
        if N - L < 16:
            raise ValueError(
                f"step {h:g} too coarse: kernel support must span >= 16 steps (has {N - L})")
        self.correction_passes = int(correction_passes)

        def W(tau):
            return np.exp(-params.gamma * tau) * pdf_eval(d, tau)

        xi = GL_NODES
        q = np.arange(N, L, -1)  # lag index, ascending step order
        self.w_full = (h * GL_WEIGHTS * W(q[:, None] * h - h * xi)).ravel()
        m = np.arange(N - 1, L, -1)
        self.w_mid = (h * GL_WEIGHTS * W((m[:, None] + 0.5) * h - h * xi)).ravel()
        self.w_hi_end = 0.5 * h * GL_WEIGHTS * W(N * h - 0.5 * h * xi)
        self.w_lo_start = 0.5 * h * GL_WEIGHTS * W((L + 0.5) * h - 0.5 * h * xi)
        self.w_last = self.w_full[-8:]  # lag panel [L h, (L+1) h]

    # -- tables -----------------------------------------------------------
    def _alloc(self, k0: int, k_end: int, source: Trajectory | None, prehistory: float | None):
        kmin = k0 - self.N
        rows = k_end - kmin
        Hf = np.empty((rows, 8))
        Hlo = np.empty((rows, 8))
        Hhi = np.empty((rows, 8))
        n_pre = max(0, min(-kmin, k0 - kmin))
        if n_pre:
            if prehistory is None:
                raise CoverageError(f"no solution before t=0 but run starts at t={k0 * self.h}")
            Hf[:n_pre] = Hlo[:n_pre] = Hhi[:n_pre] = prehistory
        k_src = np.arange(max(kmin, 0), k0)
        if k_src.size:
            if source is None:
                raise CoverageError(f"need solution on [0, {k0 * self.h}] to start")
            tk = k_src * self.h
            s = tk[:, None] + self.h * np.concatenate([_THETA_FULL, _THETA_LO, _THETA_HI])
            v = flux(self.params, source.x_at(s))
            r = k_src - kmin
            Hf[r], Hlo[r], Hhi[r] = v[:, :8], v[:, 8:16], v[:, 16:]
        return kmin, Hf, Hlo, Hhi

    def _grid_integral(self, tables, n: int) -> float:
        # delay integral at the grid time t_n; needs only accepted steps
        kmin, Hf = tables[0], tables[1]
        r = n - kmin
        return float(self.w_full @ Hf[r - self.N: r - self.L].ravel())

    def run(self, k0: int, k_end: int, x0: float, y0: float,
            source: Trajectory | None = None, prehistory: float | None = None) -> Trajectory:
        """Advance from ``t = k0 h`` to ``t = k_end h``.

        ``source`` supplies the solution on ``[0, k0 h]``; ``prehistory`` is the
        constant flux beta(mu) mu standing in for t < 0 (the initial cohort).
        """
        p = self.params
        h, N, L = self.h, self.N, self.L
        delta, gamma = p.delta, p.gamma
        b0, theta, nh = p.hill.beta0, p.hill.theta, p.hill.n
        tables = self._alloc(k0, k_end, source, prehistory)
        kmin, Hf, Hlo, Hhi = tables
        w_full, w_mid, w_hi, w_lo, w_last = (self.w_full, self.w_mid, self.w_hi_end,
                                             self.w_lo_start, self.w_last)
        w_full_acc = w_full[:-8]
        vanishing = L == 0
        passes = 1 + self.correction_passes if vanishing else 1
        B16 = _B_LO_FULL
        B24 = _B24

        def fl(x):
            return b0 / (1.0 + (max(x, 0.0) / theta) ** nh) * x

        nsteps = k_end - k0
        ts = (k0 + np.arange(nsteps + 1)) * h
        X = np.empty(nsteps + 1)
        Y = np.empty(nsteps + 1)
        DX = np.empty(nsteps + 1)
        DY = np.empty(nsteps + 1)

        xn, yn = float(x0), float(y0)
        I0 = self._grid_integral(tables, k0)
        fx = fl(xn)
        dxn = -delta * xn - fx + 2.0 * I0
        dyn = -gamma * yn + fx - I0
        X[0], Y[0], DX[0], DY[0] = xn, yn, dxn, dyn
        x_prev = dx_prev = None
        half = 0.5 * h

        for i in range(nsteps):
            n = k0 + i
            r = n - kmin
            if vanishing:
                A1 = float(w_full_acc @ Hf[r - N + 1: r].ravel())
                Ah = float(w_hi @ Hhi[r - N]) + float(w_mid @ Hf[r - N + 1: r].ravel())
                if x_prev is None:
                    x1 = xn + h * dxn
                    dx1 = dxn
                else:
                    x1 = 5.0 * x_prev + 2.0 * h * dx_prev - 4.0 * xn + 4.0 * h * dxn
                    dx1 = 12.0 * (x_prev - xn) / h + 5.0 * dx_prev + 8.0 * dxn
            else:
                A1 = float(w_full @ Hf[r - N + 1: r - L + 1].ravel())
                Ah = (float(w_hi @ Hhi[r - N]) + float(w_mid @ Hf[r - N + 1: r - L].ravel())
                      + float(w_lo @ Hlo[r - L]))
                I1, Ih = A1, Ah

            k1, l1 = dxn, dyn
            for _ in range(passes):
                if vanishing:
                    v = flux(p, B16 @ np.array([xn, h * dxn, x1, h * dx1]))
                    I1 = A1 + float(w_last @ v[:8])
                    Ih = Ah + float(w_lo @ v[8:])
                xa = xn + half * k1
                fa = fl(xa)
                k2 = -delta * xa - fa + 2.0 * Ih
                l2 = -gamma * (yn + half * l1) + fa - Ih
                xb = xn + half * k2
                fb = fl(xb)
                k3 = -delta * xb - fb + 2.0 * Ih
                l3 = -gamma * (yn + half * l2) + fb - Ih
                xc = xn + h * k3
                fc = fl(xc)
                k4 = -delta * xc - fc + 2.0 * I1
                l4 = -gamma * (yn + h * l3) + fc - I1
                x1 = xn + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                y1 = yn + h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
                dx1 = -delta * x1 - fl(x1) + 2.0 * I1
            if vanishing:
                v = flux(p, B16[:8] @ np.array([xn, h * dxn, x1, h * dx1]))
                I1 = A1 + float(w_last @ v)
            f1 = fl(x1)
            dx1 = -delta * x1 - f1 + 2.0 * I1
            dy1 = -gamma * y1 + f1 - I1
            if not (math.isfinite(x1) and math.isfinite(y1) and math.isfinite(dx1)):
                raise NumericalError(f"non-finite state at t={(n + 1) * h:.6g}")

            v = flux(p, B24 @ np.array([xn, h * dxn, x1, h * dx1]))
            Hf[r] = v[:8]
            Hlo[r] = v[8:16]
            Hhi[r] = v[16:]

            x_prev, dx_prev = xn, dxn
            xn, yn, dxn, dyn = x1, y1, dx1, dy1
            X[i + 1], Y[i + 1], DX[i + 1], DY[i + 1] = xn, yn, dxn, dyn

        return Trajectory(ts, X, Y, DX, DY)


def integrate(params: ModelParams, history: Trajectory, cfg: IntegratorConfig) -> Trajectory:
    """Continue ``history`` (covering ``[0, tau_max]``) to ``cfg.t_end``."""
    d = params.density
    t0, t1 = history.t_span
    if t0 > 1e-12 or t1 < d.tau_max - 1e-9 * max(1.0, d.tau_max):
        raise CoverageError(f"history must cover [0, {d.tau_max}], has [{t0}, {t1}]")
    if not cfg.t_end > d.tau_max:
        raise ValueError("t_end must exceed tau_max")
    eng = DelayRK4(params, cfg.step, cfg.correction_passes)
    k0 = eng.N
    k_end = k0 + math.ceil((cfg.t_end - d.tau_max) / eng.h - 1e-9)
    x0 = history.x_at(d.tau_max)
    y0 = history.y_at(d.tau_max)
    part = eng.run(k0, k_end, x0, y0, source=history)
    return history.restrict(0.0, d.tau_max).concat(part)


def _tau_panels(params: ModelParams, traj: Trajectory, t: float, lo: float, hi: float):
    d = params.density
    bps = d.breakpoints
    grid_tau = t - traj.t
    cuts = np.concatenate([[lo, hi], bps[(bps > lo) & (bps < hi)],
                           grid_tau[(grid_tau > lo) & (grid_tau < hi)]])
    edges = np.unique(cuts)
    # drop slivers created by rounding
    keep = np.concatenate([[True], np.diff(edges) > 1e-13 * max(1.0, hi)])
    return edges[keep]


def delay_functional(traj: Trajectory, params: ModelParams, t: float,
                     tau_lo: float | None = None, tau_hi: float | None = None) -> float:
    """Division inflow 2 I(t) to the resting phase.

    Composite Gauss-Legendre on panels aligned to the trajectory grid.

    ``tau_lo``/``tau_hi`` restrict the delay range (e.g. to ``[tau_min, t]``
    while the initial cohort is still dividing).
    """
    d = params.density
    lo = d.tau_min if tau_lo is None else max(d.tau_min, tau_lo)
    hi = d.tau_max if tau_hi is None else min(d.tau_max, tau_hi)
    if hi <= lo:
        return 0.0
    t0, t1 = traj.t_span
    tol = 1e-9 * max(1.0, abs(t))
    if t - hi < t0 - tol or t - lo > t1 + tol:
        raise CoverageError(f"trajectory [{t0}, {t1}] does not span [{t - hi}, {t - lo}]")
    edges = _tau_panels(params, traj, t, lo, hi)
    w = np.diff(edges)
    tau = (edges[:-1, None] + w[:, None] * GL_NODES).ravel()
    wt = (w[:, None] * GL_WEIGHTS).ravel()
    s = np.clip(t - tau, t0, t1)
    vals = flux(params, traj.x_at(s))
    return 2.0 * float(np.sum(wt * np.exp(-params.gamma * tau) * pdf_eval(d, tau) * vals))


def y_explicit(traj: Trajectory, params: ModelParams, t: float, outer_width: float = 0.25) -> float:
    """y(t) = int f(tau) int_{t-tau}^t e^{-gamma (t-s)} beta(x(s)) x(s) ds dtau, t >= tau_max.

    Outer Gauss-Legendre over tau; the inner integral is accumulated from the
    right over panels aligned to the trajectory grid, then completed with a
    partial-panel rule at each outer node.
    """
    d = params.density
    g = params.gamma
    t0, t1 = traj.t_span
    tol = 1e-9 * max(1.0, abs(t))
    if t - d.tau_max < t0 - tol or t > t1 + tol:
        raise CoverageError(f"trajectory [{t0}, {t1}] does not span [{t - d.tau_max}, {t}]")

    # inner: panels in s over [t - tau_max, t]
    s_lo = t - d.tau_max
    inner = traj.t[(traj.t > s_lo) & (traj.t < t)]
    sb = np.unique(np.concatenate([[s_lo, t], inner]))
    ws = np.diff(sb)
    s_nodes = sb[:-1, None] + ws[:, None] * GL_NODES
    integrand = lambda s: np.exp(-g * (t - s)) * flux(params, traj.x_at(np.clip(s, t0, t1)))
    panel = (ws[:, None] * GL_WEIGHTS * integrand(s_nodes)).sum(axis=1)
    right = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])  # int_{sb[j]}^t

    # outer: panels in tau over the support, split at density breakpoints
    bps = d.breakpoints
    pieces = []
    for a, b in zip(bps[:-1], bps[1:]):
        m = max(1, math.ceil((b - a) / outer_width - 1e-9))
        pieces.append(np.linspace(a, b, m + 1))
    te = np.unique(np.concatenate(pieces))
    wt = np.diff(te)
    tau = (te[:-1, None] + wt[:, None] * GL_NODES).ravel()
    wtau = (wt[:, None] * GL_WEIGHTS).ravel() * pdf_eval(d, tau)

    s_start = t - tau
    j = np.clip(np.searchsorted(sb, s_start, side="right") - 1, 0, sb.size - 2)
    b_right = sb[j + 1]
    part_w = b_right - s_start
    part_nodes = s_start[:, None] + part_w[:, None] * GL_NODES
    partial = (part_w[:, None] * GL_WEIGHTS * integrand(part_nodes)).sum(axis=1)
    G = right[j + 1] + partial
    return float(wtau @ G)
