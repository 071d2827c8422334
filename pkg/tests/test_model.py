import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from hemadde.kernel import DivisionDensity
from hemadde.model import (HillRate, ModelParams, beta_eval, beta_prime, beta_star_at, boundedness_bound,
                           equilibria, existence, explosion_predicted, map_unimodal_peak,
                           positive_equilibrium, positive_root_bisect)

K = (1 - math.exp(-1.4)) / 1.4


def test_beta_values():
    h = HillRate()
    assert beta_eval(h, 0.0) == 1.77
    assert beta_eval(h, 1.0) == pytest.approx(1.77 / 2)
    x_star = ((2 * K - 1) * 1.77 / 0.05 - 1) ** (1 / 3)
    assert beta_eval(h, x_star) == pytest.approx(0.65540, abs=5e-5)
    assert beta_eval(h, x_star) == pytest.approx(0.05 / (2 * K - 1), rel=1e-13)


@pytest.mark.parametrize("n", [1.5, 2.0, 3.0, 7.0])
def test_beta_prime(n):
    h = HillRate(n=n, theta=2.0)
    assert beta_prime(h, 0.0) == 0.0
    assert beta_prime(h, 2.0) == pytest.approx(-1.77 * n / 8.0, rel=1e-12)
    eps = 1e-6
    x = 1.3
    fd = (beta_eval(h, x + eps) - beta_eval(h, x - eps)) / (2 * eps)
    assert beta_prime(h, x) == pytest.approx(fd, rel=1e-7)


def test_unimodal_peak():
    assert map_unimodal_peak(HillRate(n=2.0)) == pytest.approx(1.0)
    xb = map_unimodal_peak(HillRate())
    assert xb == pytest.approx(2 ** (-1 / 3))
    h = HillRate()
    eps = 1e-6
    g = lambda x: x * beta_eval(h, x)
    assert abs(g(xb + eps) - g(xb - eps)) / (2 * eps) < 1e-8
    assert map_unimodal_peak(HillRate(theta=1.62e8)) == pytest.approx(1.62e8 * 2 ** (-1 / 3))
    with pytest.raises(ValueError):
        map_unimodal_peak(HillRate(n=1.0))


def test_existence():
    r = existence(ModelParams())
    assert r.threshold_alpha == pytest.approx((2 * K - 1) * 1.77, abs=1e-12)
    assert r.threshold_alpha == pytest.approx(0.13503, abs=1e-5)
    assert r.exists_positive
    assert not existence(ModelParams(delta=0.3)).exists_positive
    late = ModelParams(density=DivisionDensity.uniform(6.5, 7.0))
    assert existence(late).threshold_alpha < 0 and not existence(late).exists_positive


def test_equilibria_default():
    eqs = equilibria(ModelParams())
    assert [e.kind for e in eqs] == ["trivial", "positive"]
    e = eqs[1]
    x_ref = ((2 * K - 1) * 1.77 / 0.05 - 1) ** (1 / 3)
    assert e.x_star == pytest.approx(x_ref, rel=1e-14)
    assert e.x_star == pytest.approx(1.19378, abs=2e-4)
    assert e.x_star == pytest.approx(positive_root_bisect(ModelParams()), abs=1e-10)
    assert e.beta_star < 0 and e.x_star > 2 ** (-1 / 3)
    assert len(equilibria(ModelParams(delta=0.3))) == 1


def test_beta_star_near_critical():
    e = positive_equilibrium(ModelParams().with_values(n=2.53))
    assert e.beta_star == pytest.approx(-0.3881, abs=1e-3)


def test_gamma_zero_branch():
    p = ModelParams(gamma=0.0)
    e = positive_equilibrium(p)
    assert e.y_star == pytest.approx(p.delta * e.x_star * 3.5, rel=1e-13)


def test_explosion():
    assert explosion_predicted(ModelParams(delta=0.0), 1.0)
    assert not explosion_predicted(ModelParams(), 1.0)
    assert not explosion_predicted(ModelParams(delta=0.0, gamma=1.0), 1.0)


def test_boundedness_bound_above_equilibrium():
    x0, x1 = boundedness_bound(ModelParams())
    assert x1 >= positive_equilibrium(ModelParams()).x_star


def test_params_roundtrip(tmp_path):
    p = ModelParams(delta=0.07).with_values(n=2.5, theta=3.0)
    assert ModelParams.from_json(p.to_json()) == p
    csvp = tmp_path / "f.csv"
    csvp.write_text("1,0\n2,1\n3,0\n")
    q = ModelParams.from_dict({"density": {"kind": "tabulated", "csv_path": "f.csv"}}, tmp_path)
    assert q.density.tau_min == 1.0
    with pytest.raises(KeyError):
        ModelParams.from_dict({"delt": 0.1})
    with pytest.raises(ValueError):
        ModelParams(delta=-1.0)
    json.loads(p.to_json())


@settings(max_examples=60, deadline=None)
@given(n=st.floats(1.05, 9.0), theta=st.floats(0.1, 50.0), delta=st.floats(0.001, 0.13))
def test_closed_form_matches_bisection(n, theta, delta):
    p = ModelParams(delta=delta).with_values(n=n, theta=theta)
    e = positive_equilibrium(p)
    assert e is not None
    assert e.x_star == pytest.approx(positive_root_bisect(p), rel=1e-10)
    # equilibrium balance (2K - 1) beta(x*) = delta
    assert (2 * p.moments.K - 1) * beta_eval(p.hill, e.x_star) == pytest.approx(delta, rel=1e-10)
    assert beta_star_at(p, e.x_star) == pytest.approx(e.beta_star)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.0, 100.0), y=st.floats(0.0, 100.0), n=st.floats(0.5, 8.0))
def test_beta_decreasing_and_positive(x, y, n):
    h = HillRate(n=n)
    lo, hi = sorted((x, y))
    assert beta_eval(h, hi) <= beta_eval(h, lo)
    assert beta_eval(h, lo) > 0
