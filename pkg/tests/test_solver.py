import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import zero_problem
from oracles import bisect, q4_g1, q4_residual, x1_norm
from tsbvp.errors import DomainError, NewtonFailure
from tsbvp.growth import BallParams
from tsbvp.problemfile import from_dict
from tsbvp.solver import (
    SolverConfig,
    assemble_residual,
    classify,
    collocation_set,
    multistart_search,
    newton_solve,
    start_fields,
)
from tsbvp.timescale import TimeScale

PARAMS = BallParams(r=4, L=5, R=10, m=1050, A=0.025)


def linear_problem(c, a1, a2, alpha, beta, T=6):
    raw = {
        "name": "linear",
        "timescale": {"kind": "uniform", "h": 1, "T": T},
        "n": 2,
        "f": f"{c} + {a1}*x1 + {a2}*x2",
        "g": [f"{alpha} + {beta}*x"],
        "envelope": {
            "B": 1,
            "f_terms": {"b0": abs(c), "terms": [{"b": abs(a1), "k": 1}, {"b": abs(a2), "k": 1}]},
            "g_terms": [{"a0": abs(alpha), "terms": [{"a": abs(beta), "l": 1}]}],
        },
        "params": {"m": 1, "r": 1, "L": 2, "R": 3},
    }
    return from_dict(raw).problem


def dense_linear_solution(c, a1, a2, alpha, beta, T=6):
    """Hand-assembled difference system on {0, 1, ..., T}."""
    N = T + 1
    M = np.zeros((N, N))
    rhs = np.zeros(N)
    row = 0
    for i in range(2, N - 1):
        k = i - 1
        M[row, k + 2] += 1
        M[row, k + 1] += -2
        M[row, k] += 1
        M[row, k] += a1
        M[row, k + 1] += a2
        M[row, k] += -a2
        rhs[row] = -c
        row += 1
    M[row, 1], M[row, 0] = 1, -1 - beta
    rhs[row] = alpha
    M[row + 1, 1] = 1
    M[row + 2, N - 1] = 1
    return np.linalg.solve(M, rhs)


def test_collocation_set_examples(example_problem):
    assert collocation_set(example_problem) == [4.0, 16.0, 64.0]
    assert collocation_set(zero_problem(TimeScale([0, 1, 4]), 1)) == [1.0]
    assert collocation_set(zero_problem(TimeScale.uniform(1, 4), 2)) == [2.0, 3.0]


def test_assemble_residual_matches_hand_written(example_problem):
    rng = np.random.default_rng(4)
    for _ in range(50):
        u = rng.normal(size=6) * 3
        got = assemble_residual(example_problem, u)
        want = np.array(q4_residual(list(u)))
        assert np.allclose(got, want, rtol=1e-13, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(start=st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_trivial_system_converges_to_zero(q4, start):
    rec = newton_solve(zero_problem(q4, 2), np.array(start), SolverConfig(tol_residual=1e-12))
    assert rec.residual_inf < 1e-12
    assert np.max(np.abs(rec.u.values)) < 1e-9


@pytest.mark.parametrize(
    "coeffs",
    [(1.0, 0.0, 0.0, 0.0, 0.0), (0.5, 0.2, -0.3, 0.25, 0.4), (-2.0, -0.1, 0.05, 1.0, -0.5)],
)
def test_linear_system_matches_dense_oracle(coeffs):
    p = linear_problem(*coeffs)
    want = dense_linear_solution(*coeffs)
    rec = newton_solve(p, np.zeros(p.N))
    assert rec.residual_inf < 1e-10
    assert np.allclose(rec.u.values, want, rtol=1e-8, atol=1e-9)
    assert rec.iterations <= 3


def test_example_matches_scalar_root(example_problem):
    # with u(σ(0)) = 0 the g-condition reduces to u(0) + g1(u(0)) = 0
    root = bisect(lambda x: x + q4_g1(x), -2.0, 0.0)
    rec = newton_solve(example_problem, np.zeros(6))
    assert rec.residual_inf < 1e-10
    assert rec.u(0) == pytest.approx(root, abs=1e-9)
    assert rec.u(1) == pytest.approx(0, abs=1e-12)
    assert max(abs(v) for v in q4_residual(list(rec.u.values))) < 1e-9
    assert rec.x_norm == pytest.approx(x1_norm([0, 1, 4, 16, 64, 256], rec.u.values, 2), rel=1e-12)


def test_newton_rejects_wrong_shape(example_problem):
    with pytest.raises(DomainError):
        newton_solve(example_problem, np.zeros(5))


def test_newton_iteration_cap(example_problem):
    with pytest.raises(NewtonFailure) as info:
        newton_solve(example_problem, np.full(6, 50.0), SolverConfig(max_newton_iter=1))
    assert info.value.iterations == 1


@pytest.mark.parametrize(
    "norm,shell",
    [(0.0, "U1"), (3.999, "U1"), (4.0, "U2-U1"), (4.5, "U2-U1"), (5.0, "U3-U2"), (9.9, "U3-U2"), (10.0, "outside")],
)
def test_classify_shells(norm, shell):
    assert classify(norm, np.zeros(3), PARAMS, 1e-9) == (shell, True)


def test_classify_sign():
    assert classify(1.0, np.array([0.0, -1e-10, 2.0]), PARAMS, 1e-9)[1]
    assert not classify(1.0, np.array([0.0, -1e-8]), PARAMS, 1e-9)[1]
    assert classify(1.0, np.zeros(2), None, 1e-9) == (None, True)


def test_start_fields_are_stratified(example_problem):
    cfg = SolverConfig(n_starts=20, seed=3)
    starts = start_fields(example_problem, cfg)
    assert len(starts) == 20 and np.all(starts[0] == 0)
    norms = [x1_norm([0, 1, 4, 16, 64, 256], s, 2) for s in starts[1:]]
    assert all(0 < v <= 10 + 1e-12 for v in norms)
    for a, b in zip(starts, start_fields(example_problem, cfg)):
        assert np.array_equal(a, b)


def test_multistart_example(example_problem):
    res = multistart_search(example_problem, SolverConfig(n_starts=30))
    assert res.starts == 30
    assert len(res.records) >= 1
    assert res.successes == len(res.records) + res.dedup_merges
    for rec in res.records:
        assert rec.residual_inf < 1e-10
        assert max(abs(v) for v in q4_residual(list(rec.u.values))) < 1e-9
    norms = [r.x_norm for r in res.records]
    assert norms == sorted(norms)
    assert sum(res.shell_counts().values()) == len(res.records)


def test_multistart_deterministic_and_worker_invariant(example_problem):
    cfg = SolverConfig(n_starts=24, seed=9)
    a = multistart_search(example_problem, cfg)
    b = multistart_search(example_problem, cfg)
    c = multistart_search(example_problem, SolverConfig(n_starts=24, seed=9, workers=4))
    da = [r.to_dict() for r in a.records]
    assert da == [r.to_dict() for r in b.records]
    assert da == [r.to_dict() for r in c.records]
    assert a.stats() == c.stats()


def test_multistart_dedups_trivial_solution(q4):
    res = multistart_search(zero_problem(q4, 2), SolverConfig(n_starts=15))
    assert len(res.records) == 1
    assert res.dedup_merges == 14
    assert res.records[0].shell == "U1"
    assert res.records[0].nonnegative


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(tol_residual=0)
    with pytest.raises(DomainError):
        SolverConfig(damping_factor=1.0)
    with pytest.raises(DomainError):
        SolverConfig(n_starts=0)
    assert "workers" not in SolverConfig().to_dict()
