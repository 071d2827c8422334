"""Post-processing of trajectories: periods, convergence and the limit checks."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import Equilibrium, ModelParams
from .trajectory import Trajectory

# oscillation must rise this far above the mean level (relative) to count
PEAK_REL_THRESHOLD = 0.005
# major maxima lie above mean + MAJOR_FRACTION * (max - mean)
MAJOR_FRACTION = 0.5
CONVERGED_REL = 0.02
CONFIDENT_REL_STDERR = 0.05


class NotOscillating(RuntimeError):
    pass


@dataclass
class PeriodEstimate:
    period: float
    period_stderr: float
    n_cycles: int
    amplitude_min: float
    amplitude_max: float
    peak_times: np.ndarray
    method: str = "PeakToPeak"

    @property
    def confident(self) -> bool:
        return self.n_cycles >= 3 and self.period_stderr <= CONFIDENT_REL_STDERR * self.period

    def to_dict(self) -> dict:
        d = asdict(self)
        d["peak_times"] = self.peak_times.tolist()
        d["confident"] = self.confident
        return d


def _sample(traj: Trajectory, component: str, t0: float, t1: float, stride: float):
    n = int(np.floor((t1 - t0) / stride + 1e-9))
    ts = t0 + stride * np.arange(n + 1)
    return ts, traj(ts, component)


def find_maxima(ts: np.ndarray, vs: np.ndarray):
    """Strict local maxima, refined by a parabola through the three samples."""
    i = np.nonzero((vs[1:-1] > vs[:-2]) & (vs[1:-1] >= vs[2:]))[0] + 1
    a, b, c = vs[i - 1], vs[i], vs[i + 1]
    denom = a - 2 * b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(denom != 0, 0.5 * (a - c) / denom, 0.0)
    off = np.clip(off, -0.5, 0.5)
    dt = ts[1] - ts[0]
    return ts[i] + off * dt, b - 0.25 * (a - c) * off


def estimate_period(traj: Trajectory, component: str = "x", t_discard: float = 300.0,
                    stride: float | None = None) -> PeriodEstimate:
    """Mean gap between successive major maxima after ``t_discard``.

    A maximum counts when it rises more than 0.5 % of the mean level above
    that level, and also clears the midpoint between the mean and the largest
    value. The second test drops the secondary humps that relaxation-type
    cycles show once per period.
    """
    t0, t1 = traj.t_span
    if t_discard >= t1:
        raise ValueError(f"t_discard={t_discard} beyond trajectory end {t1}")
    if stride is None:
        stride = 0.5 * float(np.min(np.diff(traj.t[traj.t >= t_discard]))) if traj.t.size > 1 else 0.005
    ts, vs = _sample(traj, component, max(t0, t_discard), t1, stride)
    mean = float(np.mean(vs))
    pt, pv = find_maxima(ts, vs)
    floor = mean + max(PEAK_REL_THRESHOLD * abs(mean), MAJOR_FRACTION * (vs.max() - mean))
    keep = pv > floor
    pt, pv = pt[keep], pv[keep]
    if pt.size < 3:
        raise NotOscillating(f"only {pt.size} significant maxima of {component} after t={t_discard}")
    gaps = np.diff(pt)
    stderr = float(np.std(gaps, ddof=1) / np.sqrt(gaps.size)) if gaps.size > 1 else 0.0
    return PeriodEstimate(float(np.mean(gaps)), stderr, int(gaps.size), float(vs.min()),
                          float(vs.max()), pt)


@dataclass
class ConvergenceResult:
    converged: bool
    max_dev: float
    max_dev_x: float
    max_dev_y: float


def _eps_floor(params: ModelParams | None) -> float:
    theta = params.hill.theta if params is not None else 1.0
    return 1e-9 * theta


def convergence_check(traj: Trajectory, target: Equilibrium, window: float = 200.0,
                      params: ModelParams | None = None, rel: float = CONVERGED_REL) -> ConvergenceResult:
    t0, t1 = traj.t_span
    if t1 - t0 <= window:
        raise ValueError("trajectory shorter than the window")
    ts, xs, ys = traj.sample(None, t1 - window, t1)
    eps = _eps_floor(params)
    dx = float(np.max(np.abs(xs - target.x_star)) / max(target.x_star, eps))
    dy = float(np.max(np.abs(ys - target.y_star)) / max(target.y_star, eps))
    m = max(dx, dy)
    return ConvergenceResult(m < rel, m, dx, dy)


def limit_check(traj: Trajectory, params: ModelParams, target: Equilibrium,
                 window: float = 200.0) -> float:
    """Relative gap between y(t_end) and the limit beta(C) C Y0w implied by x -> C."""
    conv = convergence_check(traj, target, window, params)
    if not conv.converged:
        raise ValueError(f"x has not converged (max deviation {conv.max_dev:.3g})")
    C = target.x_star
    y_lim = float(params.beta(C)) * C * params.moments.Y0w
    y_end = float(traj.y[-1])
    return abs(y_end - y_lim) / max(target.y_star, _eps_floor(params))


def transient_peaks(traj: Trajectory, center: float, t0: float, t1: float,
                    stride: float = 0.005):
    """Maxima of x on ``[t0, t1]`` above ``center`` and their excursions ``x - center``."""
    ts, vs = _sample(traj, "x", t0, t1, stride)
    pt, pv = find_maxima(ts, vs)
    m = pv > center
    return pt[m], pv[m] - center


def strictly_increasing(traj: Trajectory, t0: float, t1: float) -> bool:
    ts, xs, _ = traj.sample(None, t0, t1)
    return bool(np.all(np.diff(xs) > 0))


def period_agreement(px: PeriodEstimate, py: PeriodEstimate) -> float:
    return abs(px.period - py.period) / px.period
