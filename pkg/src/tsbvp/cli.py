"""Command-line front end.

Exit codes: 0 pass / solutions found, 1 hypothesis violated, 2 parse or
config error, 3 no solution found.
"""
from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click

from . import report as rep
from .errors import ConfigError, DomainError
from .operators import fixed_point_iterate
from .problemfile import ProblemFile, load, load_example
from .solver import SolverConfig, multistart_search

EXIT_OK, EXIT_HYPOTHESIS, EXIT_CONFIG, EXIT_NONE_FOUND = 0, 1, 2, 3


def _emit(report: dict, fmt: str, out: Path | None) -> None:
    text = rep.render(report, fmt)
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")
        click.echo(f"{report['kind']} report written to {out} (status: {report['status']})")


def _config(pf: ProblemFile, seed, starts, tol, workers) -> SolverConfig:
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if starts is not None:
        overrides["n_starts"] = starts
    if tol is not None:
        overrides["tol_residual"] = tol
    if workers is not None:
        overrides["workers"] = workers
    try:
        return dataclasses.replace(pf.solver, **overrides)
    except DomainError as exc:
        raise ConfigError(f"solver flags: {exc}") from None


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_CONFIG)


problem_option = click.option(
    "--problem", "problem_path", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Problem file (JSON)."
)
format_option = click.option(
    "--format", "fmt", type=click.Choice(["human", "machine"]), default="human", show_default=True, help="Report format."
)
out_option = click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write the report here.")
seed_option = click.option("--seed", type=int, default=None, help="Multistart seed.")
starts_option = click.option("--starts", type=int, default=None, help="Number of Newton starts (zero start included).")
tol_option = click.option("--tol", type=float, default=None, help="Residual tolerance.")
workers_option = click.option("--workers", type=int, default=None, help="Threads for independent starts; never changes output.")


@click.group()
def cli():
    """Verify hypotheses and search for solutions of n-th order dynamic BVPs on finite time scales."""


@cli.command()
@problem_option
@format_option
@out_option
def verify(problem_path, fmt, out):
    """Check the growth bounds (A1), the radii ordering (A2) and the derived constants."""
    try:
        pf = load(problem_path)
        report = rep.verify_report(pf)
    except ConfigError as exc:
        _fail(exc)
    _emit(report, fmt, out)
    sys.exit(EXIT_OK if report["status"] == "pass" else EXIT_HYPOTHESIS)


@cli.command()
@problem_option
@seed_option
@starts_option
@tol_option
@workers_option
@format_option
@out_option
def solve(problem_path, seed, starts, tol, workers, fmt, out):
    """Multistart damped Newton search with shell and sign classification."""
    try:
        pf = load(problem_path)
        cfg = _config(pf, seed, starts, tol, workers)
    except ConfigError as exc:
        _fail(exc)
    report = rep.solve_report(pf, cfg, multistart_search(pf.problem, cfg))
    _emit(report, fmt, out)
    sys.exit(EXIT_OK if report["records"] else EXIT_NONE_FOUND)


@cli.command()
@problem_option
@click.option("--eta", type=float, default=0.1, show_default=True, help="Relaxation factor.")
@click.option("--max-iter", type=int, default=1000, show_default=True)
@tol_option
@format_option
@out_option
def iterate(problem_path, eta, max_iter, tol, fmt, out):
    """Fixed-point relaxation u <- u - eta*(S2 u)_1 from the zero function."""
    tol = 1e-10 if tol is None else tol
    try:
        pf = load(problem_path)
        result = fixed_point_iterate(pf.problem, [0.0] * pf.problem.N, eta, max_iter=max_iter, tol=tol)
    except (ConfigError, DomainError) as exc:
        _fail(exc)
    report = rep.iterate_report(pf, eta, tol, max_iter, result, pf.solver.tol_residual)
    _emit(report, fmt, out)
    sys.exit(EXIT_OK if report["status"] == "solved" else EXIT_NONE_FOUND)


@cli.command()
@seed_option
@starts_option
@tol_option
@workers_option
@format_option
@out_option
def example(seed, starts, tol, workers, fmt, out):
    """Run verify and solve on the built-in second-order example on {0} ∪ 4^{0..4}."""
    pf = load_example()
    cfg = _config(pf, seed, starts, tol, workers)
    verify_part = rep.verify_report(pf)
    solve_part = rep.solve_report(pf, cfg, multistart_search(pf.problem, cfg))
    report = rep.example_report(verify_part, solve_part)
    _emit(report, fmt, out)
    if verify_part["status"] != "pass":
        sys.exit(EXIT_HYPOTHESIS)
    sys.exit(EXIT_OK if solve_part["records"] else EXIT_NONE_FOUND)


@cli.command("show-example")
def show_example():
    """Print the built-in example problem file."""
    from .problemfile import example_text

    click.echo(example_text(), nl=False)


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="tsbvp", standalone_mode=True)
    except SystemExit:
        raise
    except Exception as exc:  # keep exit codes within 0..3
        click.echo(f"internal error: {exc!r}", err=True)
        sys.exit(EXIT_CONFIG)


if __name__ == "__main__":
    main()
