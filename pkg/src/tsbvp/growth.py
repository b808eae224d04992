"""Polynomial growth envelopes for the nonlinearities and the radii of the shells."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Any, Union

import numpy as np

from .errors import ConfigError, DomainError, ExprEvalError
from .expr import Formula

Coefficient = Union[Real, Formula]


def coefficient_at(c: Coefficient, t: float) -> float:
    if isinstance(c, Formula):
        return c(t=t)
    return float(c)


def exact(x: Real) -> Fraction:
    """Exact rational for a reported number; floats are read by their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class GTerms:
    """Bound data for one boundary nonlinearity ``|g_j(x)| <= a0 + Σ a_k |x|^{l_k}``."""

    a0: Real
    terms: tuple[tuple[Real, Real], ...] = ()

    @property
    def p(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class GrowthEnvelope:
    """Bound ``B`` and coefficient/exponent data of the growth hypothesis.

    ``f_terms[j-1] = (b_j, k_j)`` for ``j = 1..n``; ``g_terms[j-1]`` bounds
    ``g_j`` for ``j = 1..n-1``.
    """

    B: Real
    n: int
    b0: Coefficient
    f_terms: tuple[tuple[Coefficient, Real], ...]
    g_terms: tuple[GTerms, ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("equation order n must be at least 1")
        if self.B < 0:
            raise ConfigError("B must be nonnegative")
        if len(self.f_terms) != self.n:
            raise ConfigError(f"f envelope needs {self.n} terms, got {len(self.f_terms)}")
        if len(self.g_terms) != self.n - 1:
            raise ConfigError(f"g envelope needs {self.n - 1} blocks, got {len(self.g_terms)}")
        for _, k in self.f_terms:
            if k < 0:
                raise ConfigError(f"f exponent {k!r} is negative")
        for g in self.g_terms:
            for _, l in g.terms:
                if l < 0:
                    raise ConfigError(f"g exponent {l!r} is negative")

    @classmethod
    def from_dict(cls, block: dict[str, Any], n: int) -> GrowthEnvelope:
        try:
            f_block = block["f_terms"]
            b0 = _coefficient(f_block["b0"])
            f_terms = tuple((_coefficient(t["b"]), _number(t["k"])) for t in f_block["terms"])
            g_terms = tuple(
                GTerms(_number(g["a0"]), tuple((_number(t["a"]), _number(t["l"])) for t in g.get("terms", [])))
                for g in block.get("g_terms", [])
            )
            return cls(_number(block["B"]), n, b0, f_terms, g_terms)
        except KeyError as exc:
            raise ConfigError(f"envelope block is missing field {exc.args[0]!r}") from None


def _number(v: Any) -> Real:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}")
    return v


def _coefficient(v: Any) -> Coefficient:
    if isinstance(v, str):
        f = Formula(v)
        extra = f.variables - {"t"}
        if extra:
            raise ConfigError(f"coefficient {v!r} may only use t, found {sorted(extra)}")
        if not f.variables:
            return f(t=0.0)
        return f
    return _number(v)


def compute_B1(env: GrowthEnvelope) -> Real:
    """``max(2B + nB^{n+1}, max_j (2B + Σ_k B^{1+l_k}))``; the inner max is dropped when n = 1.

    Exact (int/Fraction) whenever ``B`` and the exponents are.
    """
    B, n = env.B, env.n
    candidates = [2 * B + n * B ** (n + 1)]
    for g in env.g_terms:
        candidates.append(2 * B + sum((B ** (1 + l) for _, l in g.terms), 0))
    return max(candidates)


def f_envelope(env: GrowthEnvelope, t: float, x: Sequence[float]) -> float:
    """``b_0(t) + Σ_j b_j(t) |x_j|^{k_j}``."""
    if len(x) != env.n:
        raise DomainError(f"expected {env.n} arguments, got {len(x)}")
    total = coefficient_at(env.b0, t)
    for (b, k), xj in zip(env.f_terms, x):
        total += coefficient_at(b, t) * abs(float(xj)) ** float(k)
    return total


def g_envelope(env: GrowthEnvelope, j: int, x: float) -> float:
    """``a_0j + Σ_k a_kj |x|^{l_k}`` for ``1 <= j <= n-1``."""
    if not 1 <= j <= env.n - 1:
        raise DomainError(f"g index {j} outside 1..{env.n - 1}")
    g = env.g_terms[j - 1]
    return float(g.a0) + sum(float(a) * abs(float(x)) ** float(l) for a, l in g.terms)


@dataclass
class HypothesisCheck:
    hypothesis: str
    status: str  # "pass" | "fail"
    worst_margin: float
    witness: dict[str, Any] | None
    samples: int
    method: str
    side_conditions: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {
            "hypothesis": self.hypothesis,
            "status": self.status,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "samples": self.samples,
            "method": self.method,
            "side_conditions": self.side_conditions,
        }


def _side_conditions(env: GrowthEnvelope, grid: Sequence[float]) -> list[dict[str, Any]]:
    B = float(env.B)
    rows = []
    named = [("b0", env.b0)] + [(f"b{j}", b) for j, (b, _) in enumerate(env.f_terms, start=1)]
    for name, c in named:
        vals = [coefficient_at(c, t) for t in grid]
        lo, hi = min(vals), max(vals)
        rows.append({"name": f"0 <= {name} <= B on grid", "min": lo, "max": hi, "ok": lo >= 0 and hi <= B})
    for j, g in enumerate(env.g_terms, start=1):
        coeffs = [g.a0] + [a for a, _ in g.terms]
        lo, hi = float(min(coeffs)), float(max(coeffs))
        rows.append({"name": f"0 <= a_k{j} <= B", "min": lo, "max": hi, "ok": lo >= 0 and hi <= B})
    return rows


def check_A1(
    problem,
    env: GrowthEnvelope | None = None,
    box: tuple[float, float] = (-10.0, 10.0),
    samples: int = 10_000,
    seed: int = 0,
    rtol: float = 1e-12,
) -> HypothesisCheck:
    """Seeded sampling check of the growth bounds for ``f`` and every ``g_j``.

    ``t`` is drawn from the grid and every ``x`` coordinate uniformly from
    ``box``.  A pass is evidence, not proof.  ``problem`` needs ``timescale``,
    ``n``, ``f(t, x)`` and ``g`` (list of callables).
    """
    env = problem.envelope if env is None else env
    lo, hi = box
    if not lo < hi:
        raise DomainError("sampling box must have lo < hi")
    rng = np.random.default_rng(seed)
    grid = problem.timescale.points
    n = problem.n

    worst = math.inf
    witness = None
    violated = False

    def consider(margin: float, bound: float, info: dict[str, Any]) -> None:
        nonlocal worst, witness, violated
        if not margin >= -rtol * (1.0 + abs(bound)):
            violated = True
        if margin < worst:
            worst, witness = margin, info

    t_idx = rng.integers(0, grid.size, size=samples)
    xs = rng.uniform(lo, hi, size=(samples, n))
    for i in range(samples):
        t = float(grid[t_idx[i]])
        x = [float(v) for v in xs[i]]
        bound = f_envelope(env, t, x)
        info = {"function": "f", "t": t, "x": x}
        try:
            value = problem.f(t, x)
        except ExprEvalError as exc:
            consider(-math.inf, bound, {**info, "error": str(exc)})
            continue
        consider(bound - abs(value), bound, {**info, "value": value, "bound": bound})

    for j in range(1, n):
        gx = rng.uniform(lo, hi, size=samples)
        for x in gx:
            x = float(x)
            bound = g_envelope(env, j, x)
            info = {"function": f"g{j}", "x": x}
            try:
                value = problem.g[j - 1](x)
            except ExprEvalError as exc:
                consider(-math.inf, bound, {**info, "error": str(exc)})
                continue
            consider(bound - abs(value), bound, {**info, "value": value, "bound": bound})

    sides = _side_conditions(env, [float(t) for t in grid])
    status = "pass" if not violated and all(s["ok"] for s in sides) else "fail"
    return HypothesisCheck(
        hypothesis="A1",
        status=status,
        worst_margin=worst,
        witness=witness,
        samples=samples,
        method=f"seeded sampling (seed={seed}) over grid x box [{lo}, {hi}]^{n}; evidence, not proof",
        side_conditions=sides,
    )


@dataclass(frozen=True)
class BallParams:
    """Radii ``r < L < R`` of the nested balls and the splitting constants ``m``, ``A``."""

    r: Real
    L: Real
    R: Real
    m: Real
    A: Real
    eta: Real | None = None

    def __post_init__(self):
        for name in ("r", "L", "R", "m", "A"):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name} must be positive, got {value!r}")
        if self.eta is not None and not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta!r}")


def check_A2(params: BallParams | Real, L: Real | None = None, R: Real | None = None) -> bool:
    """``r < L < R`` strictly; accepts a :class:`BallParams` or three radii."""
    if isinstance(params, BallParams):
        r, L, R = params.r, params.L, params.R
    else:
        r = params
        if L is None or R is None:
            raise DomainError("check_A2 needs r, L and R")
        for name, v in (("r", r), ("L", L), ("R", R)):
            if not v > 0:
                raise DomainError(f"{name} must be positive, got {v!r}")
    return r < L < R


def default_A(B1: Real) -> Real:
    """``1 / (10 B_1)``, exact when ``B_1`` is."""
    if B1 == 0:
        raise ConfigError("A cannot default to 1/(10 B1) when B1 = 0; give A explicitly")
    if isinstance(B1, (int, Fraction)):
        return Fraction(1, 10) / B1
    return 1.0 / (10.0 * B1)

