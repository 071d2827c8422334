import functools

import pytest

from hemadde import ModelParams, run


@functools.lru_cache(maxsize=None)
def cached_run(t_end=1000.0, mu=1.0, step=0.01, **kw):
    return run(ModelParams().with_values(**kw), mu=mu, t_end=t_end, step=step)


@pytest.fixture(scope="session")
def run_242():
    return cached_run(1000.0, n=2.42)


@pytest.fixture(scope="session")
def run_3():
    return cached_run(1500.0, n=3.0)


@pytest.fixture(scope="session")
def run_4():
    return cached_run(1500.0, n=4.0)


@pytest.fixture(scope="session")
def run_delta03():
    return cached_run(1500.0, delta=0.3)


@pytest.fixture(scope="session")
def run_delta0():
    return cached_run(400.0, delta=0.0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
