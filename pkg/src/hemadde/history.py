"""Initial history on ``[0, tau_max]`` generated from the initial resting mass mu.

Before ``tau_max`` part of the division flux comes from cells that were
already cycling at t = 0.  Their contribution,

    2 beta(mu) mu int_{max(t, tau_min)}^{tau_max} e^{-gamma tau} f(tau) dtau,

is exactly what the delay integral returns if the flux beta(x) x is held at
the constant value beta(mu) mu for t < 0.  Both stages therefore run the
ordinary delay stepper with that constant pre-history:

* on ``[0, tau_min]`` the whole window lies before t = 0 and the x equation
  is an ODE with constant source 2 beta(mu) mu K;
* on ``[tau_min, tau_max]`` the window straddles t = 0 and splits into the
  cohort tail plus the partial delay integral over ``[tau_min, t]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrator import DelayRK4, aligned_step, flux
from .model import ModelParams
from .trajectory import Trajectory

__all__ = ["HistoryConfig", "Trajectory", "stage1_ode", "stage2_nonautonomous",
           "build_history", "initial_y"]


@dataclass(frozen=True)
class HistoryConfig:
    mu: float = 1.0
    step: float | None = None  # default tau_max / 2800

    def __post_init__(self):
        if not (self.mu >= 0 and np.isfinite(self.mu)):
            raise ValueError(f"mu must be finite and >= 0, got {self.mu}")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be > 0")

    def resolved_step(self, params: ModelParams) -> float:
        step = params.density.tau_max / 2800 if self.step is None else self.step
        return aligned_step(params.density, step)


def initial_y(params: ModelParams, mu: float) -> float:
    """Proliferating mass at t = 0: beta(mu) mu Y0w."""
    return float(flux(params, mu)) * params.moments.Y0w


def stage1_ode(params: ModelParams, cfg: HistoryConfig) -> Trajectory:
    """Solution on ``[0, tau_min]``; a single node at t = 0 when tau_min = 0."""
    mu = cfg.mu
    eng = DelayRK4(params, cfg.resolved_step(params))
    y0 = initial_y(params, mu)
    hbar = float(flux(params, mu))
    if eng.L == 0:
        K = float(eng.w_full.sum())
        dx = -params.delta * mu - hbar + 2.0 * hbar * K
        dy = -params.gamma * y0 + hbar - hbar * K
        return Trajectory([0.0], [mu], [y0], [dx], [dy])
    return eng.run(0, eng.L, mu, y0, prehistory=hbar)


def stage2_nonautonomous(params: ModelParams, cfg: HistoryConfig, stage1: Trajectory) -> Trajectory:
    """Extend ``stage1`` over ``[tau_min, tau_max]``; returns the history on ``[0, tau_max]``."""
    d = params.density
    t0, t1 = stage1.t_span
    if t0 != 0.0 or abs(t1 - d.tau_min) > 1e-9 * max(1.0, d.tau_max):
        raise ValueError(f"stage1 must cover [0, {d.tau_min}], has [{t0}, {t1}]")
    eng = DelayRK4(params, cfg.resolved_step(params))
    hbar = float(flux(params, cfg.mu))
    part = eng.run(eng.L, eng.N, stage1.x[-1], stage1.y[-1], source=stage1, prehistory=hbar)
    if stage1.t.size == 1:
        return part
    return stage1.concat(part)


def build_history(params: ModelParams, cfg: HistoryConfig | None = None) -> Trajectory:
    cfg = cfg or HistoryConfig()
    return stage2_nonautonomous(params, cfg, stage1_ode(params, cfg))
