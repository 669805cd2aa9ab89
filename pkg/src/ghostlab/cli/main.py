from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Callable

import numpy as np

from ghostlab.cli.config import (
    CurvesConfig,
    GhostCheckConfig,
    IdentitiesConfig,
    NonexistenceConfig,
    RunConfig,
    SimulateConfig,
    commands,
    load_config,
)
from ghostlab.cli.exports import write_array, write_rows
from ghostlab.constraints.verification import nonexistence_report
from ghostlab.core.document import write_field_document
from ghostlab.core.operators import bilinear
from ghostlab.dynamics.ghost_check import (
    GhostCheckReport,
    chained_residual_series,
    ghost_check,
    ghost_check_ensemble,
)
from ghostlab.dynamics.integrator import integrate
from ghostlab.errors import (
    CommandFailure,
    ConfigError,
    ConstraintError,
    DocumentError,
    DynamicsError,
    FieldError,
    GeometryError,
    InvalidConfigValue,
    NoAdmissibleBranch,
)
from ghostlab.exit_codes import (
    CONFIG_ERROR,
    INTERNAL_FAILURE,
    NUMERIC_FAILURE,
    SUCCESS,
    VERIFICATION_FAILURE,
)
from ghostlab.geometry.curves import CURVE_COLUMNS, curve_table, parabola_curve
from ghostlab.geometry.diagnostics import series_diagnostics
from ghostlab.identities import BilinearMap, run_identity_suite

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("t", "e", "E", "P", "A32_sq", "eta", "chained_residual")
SERIES_COLUMNS = TRAJECTORY_COLUMNS
SUMMARY_COLUMNS = (
    "seed",
    "verdict",
    "eta_derivative_max",
    "chained_residual_max",
    "final_rate_norm",
    "set_quantity",
    "eps_eta",
    "eps_chained",
)
IDENTITY_COLUMNS = ("identity", "max_residual", "tolerance", "passed")


def cmd_simulate(config: SimulateConfig, out: Path, seed: int = 0, jobs: int = 1) -> int:
    system = config.system()
    u0 = config.initial_field(system, seed)
    traj = integrate(u0, system, config.T, config.dt, config.sample_every)
    series = series_diagnostics(traj, system.force, config.lambda_)

    residual = chained_residual_series(traj, system.force, series)
    data = np.column_stack(
        [series.times, series.e, series.E, series.P, series.A32_sq, series.eta, residual]
    )
    write_array(out / "trajectory.csv", TRAJECTORY_COLUMNS, data)
    write_field_document(traj.final_state, out / "final_state.xml")

    last = series.at(len(series) - 1)
    print(f"final t={series.times[-1]:.17g} e={last.e:.17g} E={last.E:.17g} P={last.P:.17g}")
    return SUCCESS


def _summary_row(report: GhostCheckReport, label) -> tuple:
    return (
        label,
        report.verdict.value,
        report.eta_derivative_max,
        report.chained_residual_max,
        report.final_rate_norm,
        report.set_quantity,
        report.eps_eta,
        report.eps_chained,
    )


def cmd_ghost_check(config: GhostCheckConfig, out: Path, seed: int = 0, jobs: int = 1) -> int:
    spec = config.galerkin_spec()
    seeds = config.ensemble_seeds(seed)
    if seeds is not None:
        reports = ghost_check_ensemble(
            seeds,
            spec,
            config.T,
            config.dt,
            config.eps_eta,
            config.eps_chained,
            sample_every=config.sample_every,
            jobs=jobs,
        )
        labelled = [(str(r.seed), r) for r in reports]
    else:
        state = config.initial_state(seed)
        run_seed = state.value if state.kind == "seed" else None
        u0 = config.initial_field(config.system(), seed)
        report = ghost_check(
            u0,
            spec,
            config.T,
            config.dt,
            config.eps_eta,
            config.eps_chained,
            sample_every=config.sample_every,
            seed=run_seed,
        )
        labelled = [(state.kind if run_seed is None else str(run_seed), report)]

    write_rows(out / "ghost_check.csv", SUMMARY_COLUMNS, [_summary_row(r, label) for label, r in labelled])
    for label, report in labelled:
        write_array(out / f"ghost_check_{label}.csv", SERIES_COLUMNS, report.rows())

    counts = Counter(r.verdict.value for _, r in labelled)
    print(", ".join(f"{verdict}: {n}" for verdict, n in sorted(counts.items())))
    return SUCCESS


def cmd_curves(config: CurvesConfig, out: Path, seed: int = 0, jobs: int = 1) -> int:
    grid = config.grid()
    for mu in config.mu_plus:
        try:
            curve = parabola_curve(mu, config.G, grid)
        except NoAdmissibleBranch as e:
            raise InvalidConfigValue(f"e_grid: {e}") from e
        if not curve.admissible():
            logger.warning("Curve for mu_plus=%d leaves the admissible region", mu)
        table = curve_table(curve, lambda_=config.lambda_, c_bg=config.c_bg)
        write_array(out / f"curves_mu{mu}.csv", CURVE_COLUMNS, table)
    return SUCCESS


def cmd_verify_nonexistence(config: NonexistenceConfig, out: Path, seed: int = 0, jobs: int = 1) -> int:
    report = nonexistence_report(
        config.transcribed_text(),
        jobs=max(jobs, 1),
        search_samples=config.search_samples,
        seed=seed,
    )
    path = out / "nonexistence.txt"
    path.write_text(report.render(), encoding="utf-8")
    logger.info("Wrote %s", path)
    print(f"verdict: {report.verdict}")

    failure = report.first_failure
    if failure is not None:
        raise CommandFailure(VERIFICATION_FAILURE, f"step '{failure.name}' failed: {failure.detail}")
    return SUCCESS


def cmd_identities(
    config: IdentitiesConfig,
    out: Path,
    seed: int = 0,
    jobs: int = 1,
    *,
    bilinear_map: BilinearMap = bilinear,
) -> int:
    report = run_identity_suite(
        config.samples,
        np.random.default_rng(seed),
        radius_sq=config.radius_sq,
        oracle_samples=config.oracle_samples,
        bilinear_map=bilinear_map,
        seed=seed,
    )
    rows = [(name, value, tol, str(passed).lower()) for name, value, tol, passed in report.rows()]
    write_rows(out / "identities.csv", IDENTITY_COLUMNS, rows)

    failures = report.failures()
    if failures:
        raise CommandFailure(VERIFICATION_FAILURE, "failing identities: " + ", ".join(failures))
    print(f"{len(report.results)} identities hold on {report.samples} samples")
    return SUCCESS


COMMANDS: dict[str, Callable[..., int]] = {
    "simulate": cmd_simulate,
    "ghost-check": cmd_ghost_check,
    "curves": cmd_curves,
    "verify-nonexistence": cmd_verify_nonexistence,
    "identities": cmd_identities,
}


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, CommandFailure):
        return exc.code
    if isinstance(exc, (ConfigError, FieldError, DocumentError, OSError, ValueError)):
        return CONFIG_ERROR
    if isinstance(exc, (DynamicsError, GeometryError, FloatingPointError)):
        return NUMERIC_FAILURE
    if isinstance(exc, ConstraintError):
        return VERIFICATION_FAILURE
    logger.exception("Unexpected %s", type(exc).__name__, exc_info=exc)
    return INTERNAL_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostlab",
        description="Spectral-Galerkin laboratory for ghost solutions of the 2D Navier-Stokes equations",
    )
    parser.add_argument("command", choices=commands())
    parser.add_argument("--config", type=Path, help="YAML run config")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(command: str, config: RunConfig, out: Path, seed: int = 0, jobs: int = 1) -> int:
    """Run one command with exceptions mapped to exit codes."""
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[command](config, out, seed, jobs)
    except Exception as exc:
        code = exit_code_for(exc)
        logger.error("%s: %s", type(exc).__name__, exc)
        return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.seed < 0 or args.jobs < 1:
        logger.error("--seed must be >= 0 and --jobs >= 1")
        return CONFIG_ERROR

    try:
        config = load_config(args.command, args.config)
    except Exception as exc:
        code = exit_code_for(exc)
        logger.error("%s: %s", type(exc).__name__, exc)
        return code

    logger.debug("%r", config)
    return run(args.command, config, args.out, args.seed, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
