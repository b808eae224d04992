"""Damped Newton with deterministic multistart, plus cone/shell classification."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError, ExprEvalError, NewtonFailure
from .growth import BallParams
from .operators import BvpProblem, residual_parts, s1_apply
from .timescale import GridFunction, norm_X1

SHELLS = ("U1", "U2-U1", "U3-U2", "outside")


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-10
    tol_sign: float = 1e-9
    max_newton_iter: int = 50
    fd_step: float = 1e-7
    n_starts: int = 100
    seed: int = 0
    dedup_radius: float = 1e-6
    damping_factor: float = 0.5
    max_halvings: int = 30
    workers: int = 1

    def __post_init__(self):
        for name in ("tol_residual", "tol_sign", "fd_step", "dedup_radius", "damping_factor"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not self.damping_factor < 1:
            raise DomainError("damping_factor must be below 1")
        for name in ("max_newton_iter", "n_starts", "max_halvings", "workers"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be at least 1")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        # workers never changes results, keep it out of reports
        d.pop("workers")
        return d


def collocation_set(p: BvpProblem) -> list[float]:
    return [float(t) for t in p.timescale.points[p.collocation]]


def assemble_residual(p: BvpProblem, u: GridFunction | np.ndarray) -> np.ndarray:
    """Length-N vector: interior residuals in increasing t, the g-conditions, ``u(σ^{n-1}(0))``, ``u(T)``."""
    return s1_apply(p, u).flatten()


def classify(x_norm: float, values: np.ndarray, params: BallParams | None, tol_sign: float) -> tuple[str | None, bool]:
    """Shell by strict comparison of ``x_norm`` with ``r < L < R``; nonnegative iff ``min u >= -tol_sign``."""
    nonneg = bool(np.min(values) >= -tol_sign)
    if params is None:
        return None, nonneg
    if x_norm < params.r:
        shell = "U1"
    elif x_norm < params.L:
        shell = "U2-U1"
    elif x_norm < params.R:
        shell = "U3-U2"
    else:
        shell = "outside"
    return shell, nonneg


def sign_report(values: np.ndarray, tol_sign: float) -> list[str]:
    return ["zero" if abs(v) <= tol_sign else ("positive" if v > 0 else "negative") for v in values]


@dataclass
class SolutionRecord:
    u: GridFunction
    residual_inf: float
    x_norm: float
    sign_report: list[str]
    shell: str | None
    nonnegative: bool
    iterations: int = 0
    start_index: int = 0

    @classmethod
    def build(cls, p: BvpProblem, values: np.ndarray, tol_sign: float, iterations: int = 0, start_index: int = 0):
        u = GridFunction(p.timescale, values)
        x_norm = norm_X1(u, p.n)
        shell, nonneg = classify(x_norm, u.values, p.params, tol_sign)
        return cls(
            u=u,
            residual_inf=s1_apply(p, u).max_abs(),
            x_norm=x_norm,
            sign_report=sign_report(u.values, tol_sign),
            shell=shell,
            nonnegative=nonneg,
            iterations=iterations,
            start_index=start_index,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "values": self.u.values.tolist(),
            "residual_inf": self.residual_inf,
            "x_norm": self.x_norm,
            "shell": self.shell,
            "nonnegative": self.nonnegative,
            "sign_report": self.sign_report,
            "newton_iterations": self.iterations,
            "start_index": self.start_index,
        }


def _safe_residual(p: BvpProblem, x: np.ndarray) -> np.ndarray | None:
    try:
        interior, boundary = residual_parts(p, x)
    except (ExprEvalError, OverflowError, ZeroDivisionError):
        return None
    F = np.concatenate((interior, boundary))
    return F if np.all(np.isfinite(F)) else None


def _fd_jacobian(p: BvpProblem, x: np.ndarray, F: np.ndarray, fd_step: float) -> np.ndarray | None:
    J = np.empty((F.size, x.size))
    for i in range(x.size):
        h = fd_step * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += h
        Fp = _safe_residual(p, xp)
        if Fp is None:
            return None
        J[:, i] = (Fp - F) / (xp[i] - x[i])
    return J


def newton_solve(p: BvpProblem, u0: GridFunction | np.ndarray, cfg: SolverConfig = SolverConfig(), start_index: int = 0) -> SolutionRecord:
    """Damped Newton on :func:`assemble_residual` with a forward-difference Jacobian.

    Raises :class:`NewtonFailure` on a singular Jacobian, exhausted damping,
    non-finite evaluation or iteration cap.
    """
    x = np.array(u0.values if isinstance(u0, GridFunction) else u0, dtype=float)
    if x.shape != (p.N,):
        raise DomainError(f"start must have {p.N} values")
    F = _safe_residual(p, x)
    if F is None:
        raise NewtonFailure("non-finite residual at the start", 0, math.inf)
    for it in range(cfg.max_newton_iter + 1):
        res = float(np.max(np.abs(F)))
        if res < cfg.tol_residual:
            return SolutionRecord.build(p, x, cfg.tol_sign, iterations=it, start_index=start_index)
        if it == cfg.max_newton_iter:
            break
        J = _fd_jacobian(p, x, F, cfg.fd_step)
        if J is None:
            raise NewtonFailure("non-finite residual while forming the Jacobian", it, res)
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise NewtonFailure("singular Jacobian", it, res) from None
        if not np.all(np.isfinite(d)):
            raise NewtonFailure("singular Jacobian (non-finite step)", it, res)
        merit = float(np.linalg.norm(F))
        lam = 1.0
        for _ in range(cfg.max_halvings + 1):
            x_new = x + lam * d
            F_new = _safe_residual(p, x_new)
            if F_new is not None and float(np.linalg.norm(F_new)) < merit:
                break
            lam *= cfg.damping_factor
        else:
            raise NewtonFailure("damping exhausted without residual decrease", it, res)
        x, F = x_new, F_new
    raise NewtonFailure(f"no convergence in {cfg.max_newton_iter} iterations", cfg.max_newton_iter, res)


def start_fields(p: BvpProblem, cfg: SolverConfig) -> list[np.ndarray]:
    """Zero start, then random fields scaled to norms stratified over ``(0, R]``."""
    rng = np.random.default_rng(cfg.seed)
    R = float(p.params.R) if p.params is not None else 1.0
    starts = [np.zeros(p.N)]
    k = cfg.n_starts - 1
    for i in range(k):
        w = rng.uniform(-1.0, 1.0, size=p.N)
        target = R * (i + rng.uniform()) / k
        norm = norm_X1(GridFunction(p.timescale, w), p.n)
        starts.append(w * (target / norm) if norm > 0 else w)
    return starts


@dataclass
class SearchResult:
    records: list[SolutionRecord]
    starts: int
    successes: int
    dedup_merges: int
    failures: dict[str, int] = field(default_factory=dict)

    def shell_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in SHELLS}
        for rec in self.records:
            if rec.shell is not None:
                counts[rec.shell] += 1
        return counts

    def stats(self) -> dict[str, Any]:
        return {
            "starts": self.starts,
            "successes": self.successes,
            "dedup_merges": self.dedup_merges,
            "distinct_solutions": len(self.records),
            "failures": dict(sorted(self.failures.items())),
        }


def _is_duplicate(a: SolutionRecord, b: SolutionRecord, radius: float) -> bool:
    return abs(a.x_norm - b.x_norm) < radius and float(np.max(np.abs(a.u.values - b.u.values))) < radius


def multistart_search(p: BvpProblem, cfg: SolverConfig = SolverConfig()) -> SearchResult:
    """Newton from every start; successes merged in start order, then sorted by ``x_norm``.

    Output is independent of ``cfg.workers``.
    """
    starts = start_fields(p, cfg)

    def run(item):
        idx, x0 = item
        try:
            return newton_solve(p, x0, cfg, start_index=idx)
        except NewtonFailure as exc:
            return exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run, enumerate(starts)))
    else:
        outcomes = [run(item) for item in enumerate(starts)]

    kept: list[SolutionRecord] = []
    failures: dict[str, int] = {}
    successes = merges = 0
    for out in outcomes:
        if isinstance(out, NewtonFailure):
            key = str(out).split(" in ")[0] if str(out).startswith("no convergence") else str(out)
            failures[key] = failures.get(key, 0) + 1
            continue
        successes += 1
        if any(_is_duplicate(out, k, cfg.dedup_radius) for k in kept):
            merges += 1
        else:
            kept.append(out)
    kept.sort(key=lambda r: r.x_norm)
    return SearchResult(kept, len(starts), successes, merges, failures)
