import math

import numpy as np
import pytest

from oracles import Q4_POINTS
from tsbvp.growth import BallParams, GrowthEnvelope, GTerms
from tsbvp.operators import BvpProblem
from tsbvp.problemfile import load_example
from tsbvp.timescale import GridFunction, TimeScale, norm_X1


def zero_problem(ts, n, params=None):
    env = GrowthEnvelope(B=1, n=n, b0=0, f_terms=tuple((0, 1) for _ in range(n)), g_terms=tuple(GTerms(0) for _ in range(n - 1)))
    return BvpProblem(
        timescale=ts,
        n=n,
        f=lambda t, x: 0.0,
        g=tuple((lambda x: 0.0) for _ in range(n - 1)),
        envelope=env,
        params=params or BallParams(r=4, L=5, R=10, m=1050, A=0.1),
        name="zero",
    )


def constant_problem(ts, c, n=2):
    """``f ≡ c``, ``g ≡ 0``: a linear system."""
    p = zero_problem(ts, n)
    return BvpProblem(timescale=ts, n=n, f=lambda t, x: c, g=p.g, envelope=p.envelope, params=p.params, name="const")


def third_order_problem(ts):
    """A cubic-order problem whose nonlinearities respect a B = 1 envelope."""
    env = GrowthEnvelope(
        B=1,
        n=3,
        b0=0.5,
        f_terms=((0.5, 1), (0, 1), (0.2, 2)),
        g_terms=(GTerms(0.3), GTerms(0, ((0.2, 1),))),
    )
    return BvpProblem(
        timescale=ts,
        n=3,
        f=lambda t, x: 0.5 + 0.5 * math.sin(x[0]) + 0.2 * x[2] ** 2,
        g=(lambda x: 0.3 * math.cos(x), lambda x: 0.2 * x),
        envelope=env,
        params=BallParams(r=1, L=2, R=3, m=10, A=0.05),
        name="third-order",
    )


def bounded_samples(ts, n, B, count, seed):
    """Random grid functions with ``norm_X1(u, n) <= B``, some exactly on the sphere."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        w = rng.uniform(-1, 1, len(ts))
        scale = B if i % 4 == 0 else B * rng.uniform()
        out.append(w * (scale / norm_X1(GridFunction(ts, w), n)))
    return out


@pytest.fixture(scope="session")
def q4():
    return TimeScale(Q4_POINTS)


@pytest.fixture(scope="session")
def example():
    return load_example()


@pytest.fixture(scope="session")
def example_problem(example):
    return example.problem


ACCEPTANCE = pytest.StashKey[list]()
CALL_FAILED = pytest.StashKey[bool]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.stash[CALL_FAILED] = rep.failed


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
