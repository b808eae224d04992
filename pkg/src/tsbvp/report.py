"""Machine (JSON) and human (text) reports.

The machine report is canonical JSON (sorted keys, 2-space indent, non-finite
floats written as ``null``); its schema ships as ``data/report_schema.json``.
The human report lists every leaf of the machine report, so both always carry
the same numbers.
"""
from __future__ import annotations

import json
import math
from importlib import resources
from typing import Any

from .growth import check_A1, check_A2, compute_B1, exact
from .operators import BvpProblem, FixedPointResult, hypothesis_report
from .problemfile import ProblemFile
from .solver import SHELLS, SearchResult, SolverConfig, collocation_set

SCHEMA_VERSION = 1


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_machine(report: dict[str, Any]) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _leaves(obj: Any, path: str):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _leaves(obj[k], f"{path}.{k}" if path else k)
    elif isinstance(obj, list) and obj and all(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _leaves(v, f"{path}[{i}]")
    else:
        yield path, obj


def _fmt(v: Any) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _summary(report: dict[str, Any]) -> list[str]:
    lines = []
    kind = report["kind"]
    lines.append(f"== {kind} report: {report['problem']['name']} (sha256 {report['problem']['sha256'][:12]}) ==")
    lines.append(f"status: {report['status']}")
    verify = report if kind == "verify" else report.get("verify")
    if verify is not None:
        nums = verify["bounds"]["numbers"]
        lines.append(
            f"A1 {verify['A1']['status']}; A2 {verify['A2']['status']}; B1 = {nums['B1']['exact']}; "
            f"eta = {nums['eta']['exact']}"
        )
    solve = report if kind == "solve" else report.get("solve")
    if solve is not None:
        lines.append(f"solutions found: {len(solve['records'])}")
        lines.append("  shell     count")
        for shell in SHELLS:
            lines.append(f"  {shell:<9} {solve['shell_counts'][shell]}")
        lines.append(f"  nonnegative: {solve['nonnegative_count']} of {len(solve['records'])}")
        for i, rec in enumerate(solve["records"]):
            lines.append(
                f"  #{i}: x_norm={rec['x_norm']!r} residual_inf={rec['residual_inf']!r} "
                f"shell={rec['shell']} nonnegative={_fmt(rec['nonnegative'])}"
            )
    for note in report.get("notes", []):
        lines.append(f"note: {note}")
    return lines


def to_human(report: dict[str, Any]) -> str:
    clean = _clean(report)
    lines = _summary(clean)
    lines.append("-- all fields --")
    lines.extend(f"{path} = {_fmt(value)}" for path, value in _leaves(clean, ""))
    return "\n".join(lines) + "\n"


def render(report: dict[str, Any], fmt: str) -> str:
    return to_machine(report) if fmt == "machine" else to_human(report)


def schema() -> dict[str, Any]:
    return json.loads(resources.files("tsbvp.data").joinpath("report_schema.json").read_text(encoding="utf-8"))


def _problem_block(pf: ProblemFile) -> dict[str, Any]:
    p = pf.problem
    return {
        "name": p.name,
        "sha256": pf.sha256(),
        "n": p.n,
        "timescale": [float(t) for t in p.timescale.points],
    }


def verify_report(pf: ProblemFile) -> dict[str, Any]:
    p = pf.problem
    a1 = check_A1(p, box=pf.check.box, samples=pf.check.samples, seed=pf.check.seed)
    prm = p.params
    a2_ok = check_A2(prm)
    B1 = compute_B1(p.envelope)
    bounds = hypothesis_report(p)
    status = "pass" if a1.passed and a2_ok and bounds.passed else "fail"
    violated = []
    if not a1.passed:
        violated.append("A1: growth bounds |f| <= b0 + sum b_j |x_j|^k_j, |g_j| <= a0j + sum a_kj |x|^l_k")
    if not a2_ok:
        violated.append("A2: r < L < R")
    violated.extend(c["name"] for c in bounds.checks if not c["holds"] and not c["name"].startswith("A2"))
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "verify",
        "problem": _problem_block(pf),
        "status": status,
        "violated": violated,
        "A1": a1.to_dict(),
        "A2": {
            "hypothesis": "A2",
            "status": "pass" if a2_ok else "fail",
            "inequality": "r < L < R",
            "r": float(prm.r),
            "L": float(prm.L),
            "R": float(prm.R),
        },
        "B1": {"value": float(B1), "exact": str(exact(B1))},
        "bounds": bounds.to_dict(),
    }


def _sign_tension_notes(p: BvpProblem, search: SearchResult) -> list[str]:
    notes = [
        "existence results are non-constructive: solution counts are search outcomes, not a test of existence",
        "dynamic equation imposed on the collocation set " + str(collocation_set(p)),
    ]
    if search.records and not any(r.nonnegative for r in search.records):
        negative = sorted(
            {float(t) for r in search.records for t, s in zip(p.timescale.points, r.sign_report) if s == "negative"}
        )
        notes.append(f"no found solution is nonnegative; negative values occur at t in {negative}")
    if not search.records:
        notes.append("no solution found from the configured starts")
    return notes


def solve_report(pf: ProblemFile, cfg: SolverConfig, search: SearchResult) -> dict[str, Any]:
    p = pf.problem
    records = [r.to_dict() for r in search.records]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "solve",
        "problem": _problem_block(pf),
        "status": "found" if records else "none_found",
        "config": cfg.to_dict(),
        "collocation_set": collocation_set(p),
        "records": records,
        "statistics": search.stats(),
        "shell_counts": search.shell_counts(),
        "nonnegative_count": sum(1 for r in search.records if r.nonnegative),
        "radii": {"r": float(p.params.r), "L": float(p.params.L), "R": float(p.params.R)},
        "notes": _sign_tension_notes(p, search),
    }


def iterate_report(pf: ProblemFile, eta: float, tol: float, max_iter: int, result: FixedPointResult, tol_residual: float) -> dict[str, Any]:
    solved = result.residual_inf < tol_residual
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "iterate",
        "problem": _problem_block(pf),
        "status": "solved" if result.converged and solved else ("stalled" if result.converged else result.status),
        "eta": eta,
        "tol": tol,
        "max_iter": max_iter,
        "result": result.to_dict(),
        "notes": [
            "update u <- u - eta*(S2 u)_1; a small update does not by itself certify a solution",
        ],
    }


def example_report(verify: dict[str, Any], solve: dict[str, Any]) -> dict[str, Any]:
    ok = verify["status"] == "pass" and solve["status"] == "found"
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "example",
        "problem": verify["problem"],
        "status": "pass" if ok else "fail",
        "verify": verify,
        "solve": solve,
        "notes": solve["notes"],
    }
