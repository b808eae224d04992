"""Calculus on finite discrete time scales.

A finite time scale ``J = {t_0 = 0 < t_1 < ... < t_{N-1} = T}`` has every
non-maximal point right-scattered, so the delta derivative is the forward
difference quotient and the delta integral is a graininess-weighted left sum.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from typing import Any

import numpy as np

from .errors import DomainError


class TimeScale:
    """Immutable, strictly increasing finite point set starting at 0."""

    __slots__ = ("_points", "_index")

    def __init__(self, points: Iterable[float]):
        pts = np.array([float(p) for p in points], dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a time scale needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise DomainError("time scale points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("time scale points must be strictly increasing")
        if pts[0] != 0.0:
            raise DomainError(f"first point must be 0, got {pts[0]!r}")
        if not pts[-1] > 1.0:
            raise DomainError(f"last point T must satisfy T > 1, got {pts[-1]!r}")
        pts.setflags(write=False)
        self._points = pts
        self._index = {float(p): i for i, p in enumerate(pts)}

    @classmethod
    def q_scale(cls, q: float, K: int) -> TimeScale:
        """``{0} ∪ {q^k : 0 <= k <= K}``; exact for integer ``q``."""
        if K < 1 or int(K) != K:
            raise DomainError("q_scale needs an integer K >= 1")
        if not q > 1:
            raise DomainError("q_scale needs q > 1")
        if float(q).is_integer():
            qi = int(q)
            powers = [float(qi**k) for k in range(int(K) + 1)]
        else:
            powers = [float(q) ** k for k in range(int(K) + 1)]
        return cls([0.0, *powers])

    @classmethod
    def uniform(cls, h: float, T: float) -> TimeScale:
        if not h > 0:
            raise DomainError("uniform step h must be positive")
        steps = round(T / h)
        if steps < 1 or abs(steps * h - T) > 1e-9 * abs(T):
            raise DomainError(f"T={T!r} is not an integer multiple of h={h!r}")
        return cls([i * h for i in range(steps)] + [float(T)])

    @classmethod
    def from_spec(cls, spec: dict[str, Any]) -> TimeScale:
        """Build from a problem-file block (``explicit``, ``q_scale`` or ``uniform``)."""
        kind = spec.get("kind")
        if kind == "explicit":
            return cls(spec["points"])
        if kind == "q_scale":
            return cls.q_scale(spec["q"], spec["K"])
        if kind == "uniform":
            return cls.uniform(spec["h"], spec["T"])
        raise DomainError(f"unknown time scale kind {kind!r}")

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def T(self) -> float:
        return float(self._points[-1])

    def __len__(self) -> int:
        return self._points.size

    def __iter__(self):
        return iter(float(p) for p in self._points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeScale):
            return NotImplemented
        return np.array_equal(self._points, other._points)

    def __hash__(self) -> int:
        return hash(self._points.tobytes())

    def __repr__(self) -> str:
        return f"TimeScale({[float(p) for p in self._points]})"

    def index(self, t: float) -> int:
        """Grid index of ``t``; exact membership only."""
        try:
            return self._index[float(t)]
        except (KeyError, TypeError, ValueError):
            raise DomainError(f"{t!r} is not a point of the time scale") from None

    def mu(self) -> np.ndarray:
        """Graininess at every point (0 at T)."""
        return np.append(np.diff(self._points), 0.0)


def sigma(ts: TimeScale, t: float) -> float:
    i = ts.index(t)
    return float(ts.points[min(i + 1, len(ts) - 1)])


def rho(ts: TimeScale, t: float) -> float:
    i = ts.index(t)
    return float(ts.points[max(i - 1, 0)])


def sigma_iter(ts: TimeScale, t: float, k: int) -> float:
    if k < 0:
        raise DomainError("iteration count must be nonnegative")
    i = ts.index(t)
    return float(ts.points[min(i + k, len(ts) - 1)])


def graininess(ts: TimeScale, t: float) -> float:
    return sigma(ts, t) - float(t)


class GridFunction:
    """Real values on the first ``N - derivative_order`` points of a time scale.

    A ``j``-th delta derivative loses the last ``j`` points of the grid,
    mirroring ``J^k = J - {T}`` applied ``j`` times.
    """

    __slots__ = ("timescale", "values", "derivative_order")

    def __init__(self, timescale: TimeScale, values: Sequence[float] | np.ndarray, derivative_order: int = 0):
        vals = np.array(values, dtype=float)
        if vals.ndim != 1:
            raise DomainError("grid function values must be one-dimensional")
        if derivative_order < 0:
            raise DomainError("derivative order must be nonnegative")
        if vals.size != len(timescale) - derivative_order:
            raise DomainError(
                f"expected {len(timescale) - derivative_order} values, got {vals.size}"
            )
        vals.setflags(write=False)
        self.timescale = timescale
        self.values = vals
        self.derivative_order = derivative_order

    @classmethod
    def from_callable(cls, ts: TimeScale, func) -> GridFunction:
        return cls(ts, [func(t) for t in ts])

    @property
    def domain(self) -> np.ndarray:
        return self.timescale.points[: self.values.size]

    def __call__(self, t: float) -> float:
        i = self.timescale.index(t)
        if i >= self.values.size:
            raise DomainError(f"{t!r} lies outside the domain of this grid function")
        return float(self.values[i])

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"GridFunction(order={self.derivative_order}, values={self.values.tolist()})"


def _forward_difference(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    m = values.size
    return (values[1:] - values[:-1]) / (points[1:m] - points[: m - 1])


def delta_derivative(u: GridFunction, j: int = 1) -> GridFunction:
    """``j``-fold delta derivative ``(f(σ(t)) - f(t)) / μ(t)``."""
    if j < 1:
        raise DomainError("derivative order j must be positive")
    if u.values.size < j + 1:
        raise DomainError(
            f"need at least {j + 1} domain points for a {j}-th derivative, have {u.values.size}"
        )
    vals = u.values
    pts = u.timescale.points
    for _ in range(j):
        vals = _forward_difference(vals, pts)
    return GridFunction(u.timescale, vals, u.derivative_order + j)


def delta_derivatives(u: GridFunction, n: int) -> list[np.ndarray]:
    """Value arrays of ``Δ^0 u, ..., Δ^n u``, each on its own trimmed domain."""
    if u.values.size < n + 1:
        raise DomainError(f"grid too short for {n} derivatives")
    pts = u.timescale.points
    rows = [u.values]
    for _ in range(n):
        rows.append(_forward_difference(rows[-1], pts))
    return rows


def delta_integral(u: GridFunction, a: float, b: float) -> float:
    """``∫_a^b u(τ) Δτ = Σ_{τ ∈ [a, b)} μ(τ) u(τ)``."""
    ts = u.timescale
    ia, ib = ts.index(a), ts.index(b)
    if ia > ib:
        raise DomainError(f"integration bounds out of order: a={a!r} > b={b!r}")
    if ib > u.values.size:
        raise DomainError("integrand is not defined on [a, b)")
    mu = ts.mu()
    return float(np.dot(mu[ia:ib], u.values[ia:ib]))


def cumulative_integral(u: GridFunction) -> GridFunction:
    """``F(t) = ∫_0^t u Δτ`` on the full grid; needs ``u`` on ``J^k`` at least."""
    ts = u.timescale
    if u.values.size < len(ts) - 1:
        raise DomainError("integrand must be defined on every point below T")
    weighted = ts.mu()[: len(ts) - 1] * u.values[: len(ts) - 1]
    return GridFunction(ts, np.concatenate(([0.0], np.cumsum(weighted))))


def taylor_table(ts: TimeScale, k: int, s_index: int) -> np.ndarray:
    """``h_k(t, s)`` for every grid ``t`` with ``s = points[s_index]``.

    Uses ``h_0 = 1`` and ``h_{j+1}(t, s) = ∫_s^t h_j(τ, s) Δτ``, with the
    signed convention ``∫_s^t = -∫_t^s`` when ``t < s``.
    """
    if k < 0:
        raise DomainError("monomial degree must be nonnegative")
    N = len(ts)
    if k == 0:
        return np.ones(N)
    mu = ts.mu()
    # h_1 in closed form keeps h_1(t, s) = t - s bit-exact
    h = ts.points - ts.points[s_index]
    for _ in range(k - 1):
        w = mu * h
        nxt = np.zeros(N)
        # t above s: accumulate forward from s.
        nxt[s_index + 1 :] = np.cumsum(w[s_index : N - 1])
        # t below s: -Σ_{τ ∈ [t, s)}, accumulated backward from s.
        if s_index > 0:
            nxt[:s_index] = -np.cumsum(w[:s_index][::-1])[::-1]
        h = nxt
    return h


def taylor_monomial(ts: TimeScale, k: int, t: float, s: float) -> float:
    """Generalized monomial ``h_k(t, s)``."""
    it = ts.index(t)
    return float(taylor_table(ts, k, ts.index(s))[it])


def norm_X1(u: GridFunction, n: int) -> float:
    """``max_{0<=j<=n} max_t |Δ^j u(t)|`` with each row on its own domain."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if len(u.timescale) < n + 1 or u.values.size < n + 1:
        raise DomainError(f"grid too short for the order-{n} norm")
    return max(float(np.max(np.abs(row))) for row in delta_derivatives(u, n))


def values_norm_X1(ts: TimeScale, values: np.ndarray, n: int) -> float:
    return norm_X1(GridFunction(ts, values), n)


def bundle_norm(ts: TimeScale, bundle: np.ndarray, n: int) -> float:
    """Product-space norm ``max_j ||v_j||_1`` for rows of ``bundle``."""
    return max(values_norm_X1(ts, row, n) for row in np.atleast_2d(bundle))
