import math

import numpy as np
import pytest

from hemadde import ModelParams, run
from hemadde.history import HistoryConfig, build_history
from hemadde.integrator import (DelayRK4, IntegratorConfig, aligned_step, delay_functional,
                                integrate, y_explicit)
from hemadde.kernel import DivisionDensity
from hemadde.model import positive_equilibrium
from hemadde.trajectory import CoverageError, Trajectory


def const_traj(v, t1=20.0, n=2001):
    t = np.linspace(0, t1, n)
    z = np.zeros_like(t)
    return Trajectory(t, np.full_like(t, v), z, z, z)


def test_aligned_step():
    d = DivisionDensity.uniform(0.0, 7.0)
    assert aligned_step(d, 0.01) == pytest.approx(0.01)
    assert aligned_step(d, 0.015) == pytest.approx(7 / 467)
    with pytest.raises(ValueError):
        aligned_step(DivisionDensity.uniform(0.5, 7.0), 0.3)


def test_engine_needs_enough_steps():
    with pytest.raises(ValueError):
        DelayRK4(ModelParams(), 0.5)


def test_delay_functional_constant_history():
    p = ModelParams()
    e = positive_equilibrium(p)
    got = delay_functional(const_traj(e.x_star), p, 10.0)
    assert got == pytest.approx((p.delta + float(p.beta(e.x_star))) * e.x_star, abs=1e-10)
    assert delay_functional(const_traj(0.0), p, 10.0) == 0.0


def test_delay_functional_linear_history():
    p = ModelParams().with_values(theta=1e12)  # beta is constant beta0 on the range used
    t = np.linspace(0, 20, 401)
    tr = Trajectory(t, t, np.zeros_like(t), np.ones_like(t), np.zeros_like(t))
    m = p.moments
    assert delay_functional(tr, p, 12.0) == pytest.approx(2 * 1.77 * (12.0 * m.K - m.M1), abs=1e-9)
    with pytest.raises(CoverageError):
        delay_functional(tr, p, 5.0)


def test_y_explicit_at_equilibrium():
    p = ModelParams()
    e = positive_equilibrium(p)
    assert y_explicit(const_traj(e.x_star), p, 15.0) == pytest.approx(e.y_star, rel=1e-8)
    assert y_explicit(const_traj(0.0), p, 15.0) == 0.0


def test_zero_history_stays_zero():
    p = ModelParams()
    tr = integrate(p, build_history(p, HistoryConfig(mu=0.0)), IntegratorConfig(t_end=30.0))
    assert tr.t_span[1] == pytest.approx(30.0)
    assert not np.any(tr.x) and not np.any(tr.y)


def test_equilibrium_is_steady():
    p = ModelParams()
    e = positive_equilibrium(p)
    tr = run(p, mu=e.x_star, t_end=60.0)
    assert np.max(np.abs(tr.x - e.x_star)) < 1e-10
    assert np.max(np.abs(tr.y[tr.t >= 7] - e.y_star)) < 1e-10


def test_grid_and_continuity():
    tr = run(ModelParams(), t_end=20.0, step=0.02)
    assert tr.t[0] == 0.0 and tr.t[-1] == pytest.approx(20.0)
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.isfinite(tr.x)) and np.all(tr.x > 0)


def test_fourth_order_under_step_halving():
    p = ModelParams().with_values(n=2.42)
    xs = [run(p, t_end=100.0, step=h, history_step=h).x_at(100.0) for h in (0.1, 0.05, 0.025)]
    factor = abs(xs[0] - xs[1]) / abs(xs[1] - xs[2])
    assert 8.0 <= factor <= 32.0


def test_positive_min_delay_run():
    p = ModelParams(gamma=0.05, density=DivisionDensity.uniform(1.0, 7.0))
    a = run(p, t_end=60.0, step=0.02)
    b = run(p, t_end=60.0, step=0.01)
    assert a.x_at(60.0) == pytest.approx(b.x_at(60.0), rel=1e-7)


def test_y_explicit_agrees_with_integrated_y(run_3):
    p = ModelParams().with_values(n=3.0)
    for t in (100.0, 500.0):
        assert y_explicit(run_3, p, t) == pytest.approx(run_3.y_at(t), rel=1e-5)


def test_bad_config():
    with pytest.raises(ValueError):
        IntegratorConfig(step=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(correction_passes=0)
    p = ModelParams()
    with pytest.raises(ValueError):
        integrate(p, build_history(p), IntegratorConfig(t_end=5.0))


def test_slope_balances_inflow(run_3):
    p = ModelParams().with_values(n=3.0)
    for t in (50.0, 333.0, 1200.0):
        x = run_3.x_at(t)
        rhs = -(p.delta + float(p.beta(x))) * x + delay_functional(run_3, p, t)
        assert run_3.x_at(t, derivative=True) == pytest.approx(rhs, abs=1e-7)
