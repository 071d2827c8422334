import numpy as np
import pytest
from scipy.integrate import solve_ivp

from hemadde import ModelParams
from hemadde.history import HistoryConfig, build_history, initial_y, stage1_ode, stage2_nonautonomous
from hemadde.kernel import DivisionDensity

LATE = ModelParams(density=DivisionDensity.uniform(1.0, 7.0))


def test_vanishing_min_delay_stage1_is_a_point():
    p = ModelParams()
    s1 = stage1_ode(p, HistoryConfig(mu=1.0))
    assert s1.t.tolist() == [0.0]
    assert s1.x[0] == 1.0
    assert s1.y[0] == pytest.approx(float(p.beta(1.0)) * p.moments.Y0w)


def test_zero_mass_gives_zero_history():
    for p in (ModelParams(), LATE):
        h = build_history(p, HistoryConfig(mu=0.0))
        assert h.t_span == (0.0, 7.0)
        assert not np.any(h.x) and not np.any(h.y)


def test_stage1_matches_ode_solver():
    # on [0, tau_min] every dividing cell left the resting phase before t = 0
    p, mu = LATE, 1.0
    s1 = stage1_ode(p, HistoryConfig(mu=mu))
    src = float(p.beta(mu)) * mu * p.moments.K

    def rhs(t, u):
        b = float(p.beta(u[0])) * u[0]
        return [-p.delta * u[0] - b + 2 * src, -p.gamma * u[1] + b - src]

    ref = solve_ivp(rhs, (0, 1), [mu, initial_y(p, mu)], method="DOP853", rtol=1e-12, atol=1e-14)
    assert s1.t_span == (0.0, 1.0)
    assert s1.x[-1] == pytest.approx(ref.y[0, -1], rel=1e-10)
    assert s1.y[-1] == pytest.approx(ref.y[1, -1], rel=1e-10)


def test_stage1_self_convergence():
    h = 7 / 2800
    a = stage1_ode(LATE, HistoryConfig(mu=1.0, step=h))
    b = stage1_ode(LATE, HistoryConfig(mu=1.0, step=h / 16))
    assert a.x[-1] == pytest.approx(b.x[-1], rel=1e-8)


def test_stage2_self_convergence_and_coverage():
    for p in (ModelParams(), LATE):
        a = build_history(p, HistoryConfig(mu=1.0, step=0.01))
        b = build_history(p, HistoryConfig(mu=1.0, step=0.0025))
        assert a.t_span == b.t_span == (0.0, 7.0)
        assert a.x[-1] == pytest.approx(b.x[-1], rel=1e-8)
        assert a.y[-1] == pytest.approx(b.y[-1], rel=1e-8)


def test_stage2_rejects_wrong_stage1():
    s1 = stage1_ode(ModelParams(), HistoryConfig())
    with pytest.raises(ValueError):
        stage2_nonautonomous(LATE, HistoryConfig(), s1)


def test_equilibrium_mass_stays_put():
    # starting at x*, the cohort flux equals the equilibrium flux so x stays at x*
    p = ModelParams()
    xs = ((2 * p.moments.K - 1) * 1.77 / 0.05 - 1) ** (1 / 3)
    h = build_history(p, HistoryConfig(mu=xs))
    assert np.max(np.abs(h.x - xs)) < 1e-12


def test_bad_config():
    with pytest.raises(ValueError):
        HistoryConfig(mu=-1.0)
    with pytest.raises(ValueError):
        HistoryConfig(step=0.0)
    with pytest.raises(ValueError):
        HistoryConfig(step=0.3).resolved_step(ModelParams(density=DivisionDensity.uniform(0.5, 7.0)))
