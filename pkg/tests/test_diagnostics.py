import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hemadde import ModelParams
from hemadde.diagnostics import (NotOscillating, convergence_check, estimate_period, limit_check,
                                 period_agreement, strictly_increasing, transient_peaks)
from hemadde.model import equilibria, positive_equilibrium
from hemadde.trajectory import Trajectory


def synthetic(period, amp=0.3, t1=1000.0, h=0.05, phase=0.0):
    t = np.arange(0.0, t1 + h / 2, h)
    w = 2 * np.pi / period
    x = 1 + amp * np.sin(w * t + phase)
    dx = amp * w * np.cos(w * t + phase)
    return Trajectory(t, x, x, dx, dx)


def test_synthetic_sine_period():
    est = estimate_period(synthetic(45.0), "x", t_discard=100.0)
    assert est.period == pytest.approx(45.0, abs=0.1)
    assert est.confident and est.n_cycles >= 3
    assert est.amplitude_min == pytest.approx(0.7, abs=1e-3)
    assert est.to_dict()["method"] == "PeakToPeak"


def test_secondary_humps_are_skipped():
    t = np.arange(0.0, 1000.0, 0.05)
    w = 2 * np.pi / 60
    x = 1 + 0.5 * np.sin(w * t) + 0.2 * np.sin(2 * w * t + 1.0)
    dx = 0.5 * w * np.cos(w * t) + 0.4 * w * np.cos(2 * w * t + 1.0)
    tr = Trajectory(t, x, x, dx, dx)
    assert estimate_period(tr, "x", 100.0).period == pytest.approx(60.0, abs=0.1)


def test_constant_is_not_oscillating():
    t = np.linspace(0, 1000, 1001)
    z = np.zeros_like(t)
    with pytest.raises(NotOscillating):
        estimate_period(Trajectory(t, z + 1, z + 1, z, z), "x", 100.0)
    with pytest.raises(NotOscillating):
        estimate_period(synthetic(45.0, amp=1e-4), "x", 100.0)
    with pytest.raises(ValueError):
        estimate_period(synthetic(45.0), "x", 2000.0)


@settings(max_examples=25, deadline=None)
@given(period=st.floats(15.0, 90.0), phase=st.floats(0.0, 6.28), amp=st.floats(0.05, 0.9))
def test_period_recovered_for_any_sine(period, phase, amp):
    est = estimate_period(synthetic(period, amp=amp, t1=1200.0, phase=phase), "x", 100.0)
    assert est.period == pytest.approx(period, rel=2e-3)


def test_convergence_to_e_star(run_242):
    p = ModelParams().with_values(n=2.42)
    e = positive_equilibrium(p)
    r = convergence_check(run_242, e, 200.0, p)
    assert r.converged and r.max_dev < 0.02
    assert limit_check(run_242, p, e) < 1e-3


def test_transient_peaks_decay(run_242):
    e = positive_equilibrium(ModelParams().with_values(n=2.42))
    t, exc = transient_peaks(run_242, e.x_star, 0.0, 300.0)
    assert t.size >= 2
    assert np.all(np.diff(exc) < 0)


def test_trivial_convergence(run_delta03):
    p = ModelParams(delta=0.3)
    e0 = equilibria(p)[0]
    assert convergence_check(run_delta03, e0, 200.0, p).converged
    assert run_delta03.y[-1] < 1e-6
    assert limit_check(run_delta03, p, e0) < 1e-3


def test_oscillating_run(run_3):
    p = ModelParams().with_values(n=3.0)
    e = positive_equilibrium(p)
    assert not convergence_check(run_3, e, 200.0, p).converged
    with pytest.raises(ValueError):
        limit_check(run_3, p, e)
    px = estimate_period(run_3, "x", 300.0)
    py = estimate_period(run_3, "y", 300.0)
    assert period_agreement(px, py) < 0.02


def test_period_ordering(run_3, run_4):
    from conftest import cached_run
    p253 = estimate_period(cached_run(1500.0, n=2.53), "x", 300.0).period
    p3 = estimate_period(run_3, "x", 300.0).period
    p4 = estimate_period(run_4, "x", 400.0).period
    assert 30 <= p253 <= 36
    assert p253 < p3 < p4


def test_unbounded_growth(run_delta0):
    assert strictly_increasing(run_delta0, 7.0, 400.0)


def test_short_window_rejected(run_242):
    e = positive_equilibrium(ModelParams().with_values(n=2.42))
    with pytest.raises(ValueError):
        convergence_check(run_242.restrict(0, 100), e, 200.0)
