"""Residual and integral operators for the n-th order dynamic BVP.

The problem on a finite time scale ``J`` is::

    (-1)^n Δ^n u(ρ(t)) + f(t, u(ρ(t)), ..., Δ^{n-1} u(ρ(t))) = 0,   t in C
    Δ^{n-1-i} u(σ^i(0)) = g_{n-1-i}(u(σ^i(0))),                      i = 0..n-2
    u(σ^{n-1}(0)) = u(T) = 0

``S1`` maps ``u`` to the ``n + 2`` residual components, ``S2`` integrates
them against the Taylor-monomial kernel ``h_n(t, σ(s))``.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import ConfigError, DomainError
from .growth import BallParams, GrowthEnvelope, check_A2, compute_B1, exact
from .timescale import GridFunction, TimeScale, bundle_norm, norm_X1, taylor_table

FFunc = Callable[[float, Sequence[float]], float]
GFunc = Callable[[float], float]


def collocation_indices(N: int, n: int) -> range:
    """Grid indices where the dynamic equation is imposed.

    For ``n <= 2`` this is ``{t : σ^{n-1}(0) < t < T}``.  For ``n >= 3`` that
    set would need ``Δ^n u`` past its domain near ``T``, so the window is
    shifted left to ``ρ(t)`` staying inside the domain of ``Δ^n u``; the size
    is always ``N - n - 1``.
    """
    if N < n + 2:
        raise DomainError(f"grid needs at least n + 2 = {n + 2} points, has {N}")
    lo = min(n, 2)
    hi = min(N - n, N - 2)
    return range(lo, hi + 1)


@dataclass(frozen=True)
class BvpProblem:
    """Nonlinear BVP data.  ``g[j-1]`` is ``g_j``; ``f(t, x)`` takes ``x = (x_1..x_n)``."""

    timescale: TimeScale
    n: int
    f: FFunc
    g: tuple[GFunc, ...] = ()
    envelope: GrowthEnvelope | None = None
    params: BallParams | None = None
    name: str = "problem"

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("equation order n must be at least 1")
        if len(self.g) != self.n - 1:
            raise DomainError(f"order {self.n} needs {self.n - 1} boundary functions, got {len(self.g)}")
        # σ^{n-1}(0) <= T and a square, well-posed discrete system
        collocation_indices(len(self.timescale), self.n)
        if self.envelope is not None and self.envelope.n != self.n:
            raise ConfigError("envelope order does not match problem order")

    @property
    def N(self) -> int:
        return len(self.timescale)

    @cached_property
    def collocation(self) -> np.ndarray:
        return np.array(collocation_indices(self.N, self.n), dtype=int)

    @cached_property
    def kernel(self) -> np.ndarray:
        """``K[i, l] = μ(t_l) h_n(t_i, σ(t_l))`` for ``l < i``, else 0."""
        ts, N, n = self.timescale, self.N, self.n
        mu = ts.mu()
        K = np.zeros((N, N))
        for l in range(N - 1):
            h = taylor_table(ts, n, l + 1)
            K[l + 1 :, l] = mu[l] * h[l + 1 :]
        K.setflags(write=False)
        return K

    def A(self) -> float:
        if self.params is None:
            raise ConfigError("problem has no parameter block (A, m, r, L, R)")
        return float(self.params.A)


@dataclass(frozen=True)
class ResidualBundle:
    """The ``n + 2`` components of ``S1 u``.

    ``interior`` holds component 1 on ``interior_points`` (the collocation
    set); ``boundary`` holds components 2..n+2 in order: the ``n - 1``
    g-condition residuals, then ``u(σ^{n-1}(0))``, then ``u(T)``.
    """

    timescale: TimeScale
    interior_points: np.ndarray
    interior: np.ndarray
    boundary: tuple[float, ...]

    @property
    def n_components(self) -> int:
        return 1 + len(self.boundary)

    def flatten(self) -> np.ndarray:
        return np.concatenate((self.interior, np.asarray(self.boundary, dtype=float)))

    def max_abs(self) -> float:
        v = self.flatten()
        return float(np.max(np.abs(v))) if v.size else 0.0

    def as_functions(self) -> np.ndarray:
        """``(n+2, N)`` array: interior extended by 0 off the collocation set, boundary rows constant."""
        N = len(self.timescale)
        out = np.empty((self.n_components, N))
        out[0] = 0.0
        idx = np.searchsorted(self.timescale.points, self.interior_points)
        out[0, idx] = self.interior
        for j, b in enumerate(self.boundary, start=1):
            out[j] = b
        return out


def _values(p: BvpProblem, u: GridFunction | np.ndarray | Sequence[float]) -> np.ndarray:
    if isinstance(u, GridFunction):
        if u.timescale != p.timescale:
            raise DomainError("grid function lives on a different time scale")
        if u.derivative_order != 0:
            raise DomainError("expected a grid function on the full grid")
        return u.values
    vals = np.asarray(u, dtype=float)
    if vals.shape != (p.N,):
        raise DomainError(f"expected {p.N} values, got shape {vals.shape}")
    return vals


def _derivative_rows(values: np.ndarray, points: np.ndarray, n: int) -> list[np.ndarray]:
    rows = [values]
    for _ in range(n):
        prev = rows[-1]
        m = prev.size
        rows.append((prev[1:] - prev[:-1]) / (points[1:m] - points[: m - 1]))
    return rows


def residual_parts(p: BvpProblem, values: np.ndarray) -> tuple[np.ndarray, list[float]]:
    """Interior residuals on the collocation set and the ``n + 1`` boundary residuals."""
    n = p.n
    pts = p.timescale.points
    rows = _derivative_rows(values, pts, n)
    sign = -1.0 if n % 2 else 1.0
    interior = np.empty(p.collocation.size)
    for k, i in enumerate(p.collocation):
        r = i - 1  # index of ρ(t_i)
        x = [float(rows[j][r]) for j in range(n)]
        interior[k] = sign * rows[n][r] + p.f(float(pts[i]), x)
    boundary = []
    for i in range(n - 1):
        order = n - 1 - i
        boundary.append(float(rows[order][i] - p.g[order - 1](float(values[i]))))
    boundary.append(float(values[n - 1]))
    boundary.append(float(values[-1]))
    return interior, boundary


def s1_apply(p: BvpProblem, u: GridFunction | np.ndarray) -> ResidualBundle:
    """Residual bundle ``S1 u``; ``u`` solves the discrete problem iff every component vanishes."""
    values = _values(p, u)
    interior, boundary = residual_parts(p, values)
    return ResidualBundle(p.timescale, p.timescale.points[p.collocation], interior, tuple(boundary))


def s2_apply(p: BvpProblem, u: GridFunction | np.ndarray, A: float | None = None) -> np.ndarray:
    """``(S2 u)_j(t) = A / T^{n+1} Σ_{s in [0, t)} μ(s) h_n(t, σ(s)) (S1 u)_j(s)``.

    Returns an ``(n+2, N)`` array, one row per bundle component.  The
    interior component is taken as 0 off the collocation set.
    """
    A = p.A() if A is None else float(A)
    F = s1_apply(p, u).as_functions()
    scale = A / p.timescale.T ** (p.n + 1)
    return scale * (F @ p.kernel.T)


def lift(p: BvpProblem, u: GridFunction | np.ndarray) -> np.ndarray:
    """Product-space vector with ``u`` in every one of the ``n + 2`` slots."""
    arr = np.asarray(u.values if isinstance(u, GridFunction) else u, dtype=float)
    if arr.ndim == 2:
        if arr.shape != (p.n + 2, p.N):
            raise DomainError(f"expected shape {(p.n + 2, p.N)}, got {arr.shape}")
        return arr
    return np.tile(_values(p, arr), (p.n + 2, 1))


def split_T_S(p: BvpProblem, u, eta: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """``Tu = ηu`` and ``Su = u - ηu - η S2 u`` on the product space; ``η > 1``.

    ``S2`` reads only the first slot of ``u``.
    """
    if not eta > 1:
        raise DomainError(f"eta must exceed 1, got {eta!r}")
    v = lift(p, u)
    S2 = s2_apply(p, v[0])
    return eta * v, v - eta * v - eta * S2


def split_T1_S3(p: BvpProblem, v, m: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``T1 v = (1+m) v`` and ``S3 v = -|S2 v| - m v``; ``T1`` is expansive with constant ``1 + m``."""
    if m is None:
        if p.params is None:
            raise ConfigError("m not given and problem has no parameter block")
        m = p.params.m
    m = float(m)
    if not m > 0:
        raise DomainError(f"m must be positive, got {m!r}")
    w = lift(p, v)
    S2 = s2_apply(p, w[0])
    return (1.0 + m) * w, -np.abs(S2) - m * w


@dataclass
class FixedPointResult:
    u: GridFunction
    converged: bool
    iterations: int
    status: str
    residual_inf: float
    trace: list[dict[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "status": self.status,
            "residual_inf": self.residual_inf,
            "values": self.u.values.tolist(),
            "trace": self.trace,
        }


def fixed_point_iterate(
    p: BvpProblem,
    u0: GridFunction | np.ndarray,
    eta: float,
    max_iter: int = 1000,
    tol: float = 1e-10,
) -> FixedPointResult:
    """Relaxation ``u <- u - η (S2 u)_1`` until the update's X1 norm drops below ``tol``.

    Convergence is not guaranteed; a capped or diverging run is a reported
    outcome.  ``residual_inf`` tells whether the terminal iterate actually
    solves the problem.
    """
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta!r}")
    ts = p.timescale
    u = _values(p, u0).copy()
    trace = []
    status = "max_iter"
    converged = False
    k = 0
    for k in range(max_iter):
        update = eta * s2_apply(p, u)[0]
        step = norm_X1(GridFunction(ts, update), p.n)
        res = s1_apply(p, u).max_abs()
        trace.append({"iteration": k, "update_norm": step, "residual_inf": res})
        if not (math.isfinite(step) and math.isfinite(res)):
            status = "diverged"
            break
        if step < tol:
            converged = True
            status = "converged"
            break
        u = u - update
    else:
        k = max_iter
    final_res = s1_apply(p, u).max_abs() if np.all(np.isfinite(u)) else math.inf
    return FixedPointResult(GridFunction(ts, u), converged, k, status, final_res, trace)


def _num(x: Fraction) -> dict[str, Any]:
    return {"value": float(x), "exact": str(x)}


@dataclass
class BoundReport:
    status: str
    numbers: dict[str, dict[str, Any]]
    checks: list[dict[str, Any]]
    notes: list[str]

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {"status": self.status, "numbers": self.numbers, "checks": self.checks, "notes": self.notes}


def hypothesis_report(p: BvpProblem) -> BoundReport:
    """Constants of the three-solution argument and the inequalities it relies on.

    ``eta = 2 A B1 / (m r)``; the ball-boundary exclusion thresholds are
    ``1 + A B1 / (m r)`` (inner ball) and ``1 + A B1 / (m R)`` (outer ball).
    All numbers are carried as exact rationals of the reported inputs.
    """
    if p.envelope is None or p.params is None:
        raise ConfigError("hypothesis report needs both the envelope and the parameter block")
    prm = p.params
    B1 = exact(compute_B1(p.envelope))
    A, m, r, L, R = (exact(v) for v in (prm.A, prm.m, prm.r, prm.L, prm.R))
    eta = 2 * A * B1 / (m * r) if prm.eta is None else exact(prm.eta)
    inner = A * B1 / (m * r)
    outer = A * B1 / (m * R)
    numbers = {
        "B": _num(exact(p.envelope.B)),
        "B1": _num(B1),
        "A": _num(A),
        "m": _num(m),
        "r": _num(r),
        "L": _num(L),
        "R": _num(R),
        "eta": _num(eta),
        "A_B1": _num(A * B1),
        "step1_threshold": _num(1 + inner),
        "step3_threshold": _num(1 + outer),
        "expansion_constant": _num(1 + m),
    }
    checks = [
        {"name": "A2: r < L < R", "holds": check_A2(prm)},
        {"name": "B1 > 0 (non-degenerate envelope)", "holds": B1 > 0},
        {"name": "step 1: 1 + A*B1/(m*r) < 1 + eta", "holds": 1 + inner < 1 + eta},
        {"name": "step 3: A*B1/(m*R) <= A*B1/(m*r)", "holds": outer <= inner},
        {"name": "step 3: 1 + A*B1/(m*R) < 1 + eta", "holds": 1 + outer < 1 + eta},
        {"name": "m > 0 (T1 expansive)", "holds": m > 0},
    ]
    notes = [
        "eta here is 2*A*B1/(m*r), distinct from the eta > 1 of the T/S splitting",
        "S2 interior component is extended by 0 off the collocation set",
    ]
    if B1 == 0:
        notes.append("degenerate envelope: B1 = 0 makes eta = 0 and the exclusion inequalities empty")
    status = "pass" if all(c["holds"] for c in checks) else "fail"
    return BoundReport(status, numbers, checks, notes)


def operator_bounds(p: BvpProblem, u: GridFunction | np.ndarray) -> dict[str, float]:
    """Observed ``max |S1_j u|`` and ``||S2 u||`` next to their bounds ``B1`` and ``A B1``."""
    if p.envelope is None:
        raise ConfigError("problem has no envelope")
    B1 = float(compute_B1(p.envelope))
    S1 = s1_apply(p, u)
    S2 = s2_apply(p, u)
    return {
        "u_norm": norm_X1(GridFunction(p.timescale, _values(p, u)), p.n),
        "S1_max": S1.max_abs(),
        "B1": B1,
        "S2_norm": bundle_norm(p.timescale, S2, p.n),
        "A_B1": p.A() * B1,
    }
