import numpy as np
import pytest

from hemadde.trajectory import CoverageError, Trajectory, format_float


def cubic_traj(t):
    f = lambda s: 1 + s - 0.3 * s**2 + 0.05 * s**3
    df = lambda s: 1 - 0.6 * s + 0.15 * s**2
    return Trajectory(t, f(t), 2 * f(t), df(t), 2 * df(t)), f, df


def test_hermite_exact_on_cubics():
    tr, f, df = cubic_traj(np.array([0.0, 0.7, 1.5, 3.0]))
    s = np.linspace(0, 3, 41)
    assert np.allclose(tr.x_at(s), f(s), atol=1e-13)
    assert np.allclose(tr.y_at(s), 2 * f(s), atol=1e-13)
    assert np.allclose(tr.x_at(s, derivative=True), df(s), atol=1e-12)
    assert isinstance(tr.x_at(1.0), float)


def test_coverage_and_components():
    tr, *_ = cubic_traj(np.linspace(0, 2, 5))
    with pytest.raises(CoverageError):
        tr.x_at(2.5)
    with pytest.raises(ValueError):
        tr(1.0, "z")
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [1, 1], [1, 1], [0, 0], [0, 0])


def test_restrict_concat():
    tr, *_ = cubic_traj(np.linspace(0, 4, 9))
    a = tr.restrict(0, 2)
    b = tr.restrict(2, 4)
    assert a.t_span == (0.0, 2.0)
    j = a.concat(b)
    assert np.array_equal(j.t, tr.t) and np.array_equal(j.x, tr.x)
    with pytest.raises(ValueError):
        tr.restrict(0, 1).concat(tr.restrict(2, 4))


def test_sample_and_csv(tmp_path):
    tr, f, _ = cubic_traj(np.linspace(0, 1, 11))
    ts, xs, _ = tr.sample(0.25)
    assert np.allclose(ts, [0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(xs, f(ts))
    p = tmp_path / "t.csv"
    tr.to_csv(p, 0.5)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x,y" and len(lines) == 4
    assert lines[1].split(",")[0] == "0.0000000000000000e+00"
    assert format_float(1 / 3) == "3.3333333333333331e-01"
