"""Problem files: JSON documents describing a BVP, its envelope and parameters.

Top-level fields::

    name       optional label
    timescale  {"kind": "explicit", "points": [...]}
               | {"kind": "q_scale", "q": 4, "K": 4}
               | {"kind": "uniform", "h": 1, "T": 4}
    n          equation order
    f          expression in t, x1..xn
    g          list of n-1 expressions in x; g[0] is g_1
    envelope   {"B": .., "f_terms": {"b0": .., "terms": [{"b": .., "k": ..}]},
                "g_terms": [{"a0": .., "terms": [{"a": .., "l": ..}]}]}
    params     {"m": .., "r": .., "L": .., "R": .., "A"?: .., "eta"?: ..}
    solver     optional SolverConfig overrides
    check      optional {"box": [lo, hi], "samples": .., "seed": ..} for the A1 sampler
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ConfigError, DomainError, ExprSyntaxError
from .expr import Formula
from .growth import BallParams, GrowthEnvelope, compute_B1, default_A
from .operators import BvpProblem
from .solver import SolverConfig
from .timescale import TimeScale

REQUIRED = ("timescale", "n", "f", "g", "envelope", "params")
EXAMPLE_RESOURCE = "q4_second_order.json"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


@dataclass(frozen=True)
class CheckSettings:
    box: tuple[float, float] = (-10.0, 10.0)
    samples: int = 10_000
    seed: int = 0


@dataclass
class ProblemFile:
    raw: dict[str, Any]
    problem: BvpProblem
    solver: SolverConfig
    check: CheckSettings

    def to_dict(self) -> dict[str, Any]:
        return copy.deepcopy(self.raw)

    def canonical(self) -> str:
        return canonical_json(self.raw)

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def _formula(text: Any, where: str, allowed: set[str]) -> Formula:
    if not isinstance(text, str):
        raise ConfigError(f"{where}: expected an expression string, got {text!r}")
    try:
        f = Formula(text)
    except ExprSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    extra = f.variables - allowed
    if extra:
        raise ConfigError(f"{where}: variables {sorted(extra)} not allowed (use {sorted(allowed)})")
    return f


def _make_f(formula: Formula, n: int):
    names = [f"x{j}" for j in range(1, n + 1)]

    def f(t, x):
        env = dict(zip(names, x))
        env["t"] = t
        return formula.evaluate(env)

    f.formula = formula
    return f


def _make_g(formula: Formula):
    def g(x):
        return formula.evaluate({"x": x})

    g.formula = formula
    return g


def _constant(v: Any, where: str):
    """Number, or a constant expression string such as ``"1/3"``."""
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return v
    return _formula(v, where, set())(**{})


def _normalize_envelope(block: Any, n: int) -> dict[str, Any]:
    if not isinstance(block, dict):
        raise ConfigError("envelope: expected an object")
    out = copy.deepcopy(block)
    for j, g in enumerate(out.get("g_terms", []), start=1):
        if not isinstance(g, dict):
            raise ConfigError(f"envelope.g_terms[{j - 1}]: expected an object")
        if "a0" in g:
            g["a0"] = _constant(g["a0"], f"envelope.g_terms[{j - 1}].a0")
        for k, term in enumerate(g.get("terms", [])):
            if "a" in term:
                term["a"] = _constant(term["a"], f"envelope.g_terms[{j - 1}].terms[{k}].a")
    return out


def from_dict(raw: dict[str, Any]) -> ProblemFile:
    if not isinstance(raw, dict):
        raise ConfigError("problem file must be a JSON object")
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"problem file is missing required field(s): {', '.join(missing)}")
    try:
        ts = TimeScale.from_spec(raw["timescale"])
    except (DomainError, KeyError, TypeError) as exc:
        raise ConfigError(f"timescale: {exc}") from None
    n = raw["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n!r}")

    f_formula = _formula(raw["f"], "f", {"t", *(f"x{j}" for j in range(1, n + 1))})
    g_list = raw["g"]
    if not isinstance(g_list, list) or len(g_list) != n - 1:
        raise ConfigError(f"g must be a list of {n - 1} expression(s)")
    g_formulas = [_formula(text, f"g[{j}]", {"x"}) for j, text in enumerate(g_list)]

    try:
        env = GrowthEnvelope.from_dict(_normalize_envelope(raw["envelope"], n), n)
    except ExprSyntaxError as exc:
        raise ConfigError(f"envelope: {exc}") from None

    pblock = raw["params"]
    if not isinstance(pblock, dict):
        raise ConfigError("params: expected an object")
    try:
        A = pblock["A"] if "A" in pblock else default_A(compute_B1(env))
        params = BallParams(
            r=pblock["r"], L=pblock["L"], R=pblock["R"], m=pblock["m"], A=A, eta=pblock.get("eta")
        )
    except KeyError as exc:
        raise ConfigError(f"params: missing field {exc.args[0]!r}") from None
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"params: {exc}") from None

    try:
        problem = BvpProblem(
            timescale=ts,
            n=n,
            f=_make_f(f_formula, n),
            g=tuple(_make_g(g) for g in g_formulas),
            envelope=env,
            params=params,
            name=str(raw.get("name", "problem")),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None

    known = {f.name for f in fields(SolverConfig)}
    sblock = raw.get("solver", {})
    unknown = set(sblock) - known
    if unknown:
        raise ConfigError(f"solver: unknown field(s) {sorted(unknown)}")
    try:
        solver = SolverConfig(**sblock)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"solver: {exc}") from None

    cblock = raw.get("check", {})
    try:
        check = CheckSettings(
            box=tuple(float(v) for v in cblock.get("box", (-10.0, 10.0))),
            samples=int(cblock.get("samples", 10_000)),
            seed=int(cblock.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"check: {exc}") from None
    if len(check.box) != 2 or not check.box[0] < check.box[1]:
        raise ConfigError("check.box must be [lo, hi] with lo < hi")

    return ProblemFile(raw=copy.deepcopy(raw), problem=problem, solver=solver, check=check)


def loads(text: str) -> ProblemFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno} (offset {exc.pos}): {exc.msg}") from None
    return from_dict(raw)


def load(path: str | Path) -> ProblemFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read problem file: {exc}") from None
    return loads(text)


def example_text() -> str:
    return resources.files("tsbvp.data").joinpath(EXAMPLE_RESOURCE).read_text(encoding="utf-8")


def load_example() -> ProblemFile:
    """The built-in second-order example on ``{0} ∪ 4^{0..4}``."""
    return loads(example_text())
