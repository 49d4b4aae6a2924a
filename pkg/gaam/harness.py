"""

Harness for GAAM

The operations behind the command line: simulate a run, solve for the
stationary state, run a verification suite, sweep a parameter grid and
evaluate the dimension bound. Each returns a CommandResult (exit status,
console lines, written files, report document); numerical faults propagate
as exceptions for the CLI to map onto exit statuses.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from gaam import attractor_diag as diag
from gaam.constants import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    FINAL_CHECKPOINT_FILE,
    RUN_CONFIG_FILE,
    STATIONARY_CHECKPOINT_FILE,
    STATIONARY_FAILURE_FILE,
    STATIONARY_REPORT_FILE,
    SWEEP_REPORT_FILE,
    SWEEP_TABLE_FILE,
    TRAJECTORY_FILE,
    VERIFY_SUITES
)
from gaam.dynamics import SimulationConfig, iterate, simulate
from gaam.fields_metrics import random_divfree_field, sobolev_norm
from gaam.persistence import TableType, read_checkpoint, write_checkpoint, write_table, write_trajectory
from gaam.reports import (
    failure_document,
    format_check_line,
    stationary_document,
    to_plain,
    verify_document,
    write_report
)
from gaam.run_config import ConfigError, RunConfig, build_forcing, build_initial, write_run_config
from gaam.spectral_core import VectorField, derived_constants, regime_report
from gaam.stationary import (
    NonConvergenceError,
    StationarySolution,
    continuation_solve,
    regularity_gain_diagnostic,
    smallness_report
)


#
# CONSTANTS
#
logger = logging.getLogger(__name__)


#
# TYPES
#
@dataclass
class CommandResult:
    exit_code: int
    lines: List[str] = field(default_factory=list)
    outputs: Dict[str, Path] = field(default_factory=dict)
    document: Dict[str, Any] = field(default_factory=dict)


#
# PUBLIC
#
def cmd_simulate(
        cfg: RunConfig,
        out_dir: Path,
        table_type: TableType = "csv",
        force: bool = False) -> CommandResult:
    """Run the configured simulation; write the trajectory table and final checkpoint.

    Raises:
        BlowUpError: Numerical fault in the time stepping.
        FileExistsError: Outputs exist and force is False.
    """
    params = cfg.model
    f = build_forcing(cfg)
    u0 = build_initial(cfg)
    reference = resolve_reference(cfg, f)
    record = simulate(u0, f, params, cfg.sim, reference=reference)
    out_dir = Path(out_dir)
    outputs = {
        "trajectory": write_trajectory(record, out_dir / f"{TRAJECTORY_FILE}.{table_type}", table_type, force),
        "checkpoint": write_checkpoint(out_dir / FINAL_CHECKPOINT_FILE, record.final_state, params,
                                       float(record.times[-1]), force),
        "config": write_run_config(cfg, out_dir / RUN_CONFIG_FILE, force),
    }
    lines = [
        f"✓ simulated {int(record.steps[-1])} steps to t={record.times[-1]:.6g} ({len(record.times)} samples)",
        f"  final ||u||^2_H^(beta/2) = {record.norm_sq_beta[-1]:.6g}",
        f"  trajectory: {outputs['trajectory']}",
        f"  checkpoint: {outputs['checkpoint']}",
    ]
    return CommandResult(EXIT_OK, lines, outputs, {"samples": len(record.times)})


def cmd_stationary(
        cfg: RunConfig,
        out_dir: Path,
        C: Optional[float] = None,
        tol: Optional[float] = None,
        force: bool = False) -> CommandResult:
    """Solve for the stationary state by continuation and report the smallness conditions.

    On non-convergence a failure document carrying the partial continuation
    path is written before the error propagates.

    Raises:
        NonConvergenceError: Continuation failed at some epsilon.
    """
    params = cfg.model
    f = build_forcing(cfg)
    tol = cfg.tol.stationary if tol is None else tol
    C = cfg.tol.smallness_C if C is None else C
    out_dir = Path(out_dir)
    try:
        solution = continuation_solve(f, params, cfg.tol.eps_schedule, tol, cfg.tol.max_iter, cfg.tol.relaxation)
    except NonConvergenceError as error:
        document = failure_document(
            "non_convergence", str(error),
            continuation_path=[list(p) for p in error.continuation_path],
            iterate_norms=error.iterate_norms[-10:],
            smallness=smallness_report(f, params, C).to_dict())
        write_report(document, out_dir / STATIONARY_FAILURE_FILE, force=True)
        raise
    smallness = smallness_report(f, params, C)
    regularity = regularity_gain_diagnostic(solution.field, f, params)
    document = stationary_document(solution, smallness, regularity, params, tol)
    outputs = {
        "checkpoint": write_checkpoint(out_dir / STATIONARY_CHECKPOINT_FILE, solution.field, params, 0.0, force),
        "report": write_report(document, out_dir / STATIONARY_REPORT_FILE, force),
    }
    lines = [
        f"✓ stationary solution: residual {solution.residual_l2:.3e}, energy ratio {solution.energy_ratio:.6g}, "
        f"{solution.iterations} iterations",
        f"  smallness: lhs={smallness.lhs:.6g} rhs_orbital={smallness.rhs_orbital:.6g} "
        f"rhs_asymptotic={smallness.rhs_asymptotic:.6g} (C={C}) -> {smallness.verdict}",
        f"  report: {outputs['report']}",
    ]
    return CommandResult(EXIT_OK, lines, outputs, document)


def run_suite(cfg: RunConfig, suite: str, workers: int = 1, C: Optional[float] = None) -> List[diag.CheckReport]:
    """Run the checks of one verification suite.

    Suites: energy, absorbing, decay, lyapunov, dimension.
    """
    if suite not in VERIFY_SUITES:
        raise ConfigError(f"Unknown suite '{suite}' (choose from {VERIFY_SUITES})")
    params = cfg.model
    f = build_forcing(cfg)
    u0 = build_initial(cfg)
    settings = cfg.verify
    if suite == "energy":
        record = simulate(u0, f, params, cfg.sim)
        return [
            diag.energy_inequality_check(record, cfg.tol.energy),
            diag.continuity_in_data_check(u0, f, params, cfg.sim, settings.perturbation, cfg.sim.seed),
        ]
    if suite == "absorbing":
        record = simulate(u0, f, params, cfg.sim)
        window = min(settings.window_T, float(record.times[-1] - record.times[0]))
        return [
            diag.prop1_decay_check(record, u0, f, params),
            diag.prop1_integral_check(record, u0, f, params, window),
            diag.absorbing_check(record, diag.absorbing_set_spec(f, params)),
        ]
    if suite == "decay":
        return _decay_suite(cfg, f, u0, workers, C)
    if suite == "lyapunov":
        return _lyapunov_suite(cfg, f, u0)
    return _dimension_suite(cfg, f, u0)


def cmd_verify(
        cfg: RunConfig,
        suite: str,
        out_dir: Path,
        workers: int = 1,
        tol: Optional[float] = None,
        C: Optional[float] = None,
        config_name: Optional[str] = None,
        force: bool = False) -> CommandResult:
    """Run a suite, write its report document; exit 0 iff every check passes."""
    if tol is not None:
        cfg = cfg.with_updates(**{"tol.stationary": tol})
    reports = run_suite(cfg, suite, workers, C)
    document = verify_document(suite, reports, cfg.model, config_name)
    path = write_report(document, Path(out_dir) / f"verify_{suite}.yaml", force)
    lines = [format_check_line(r) for r in reports]
    lines.append(f"  report: {path}")
    code = EXIT_OK if document["passed"] else EXIT_CHECK_FAILED
    return CommandResult(code, lines, {"report": path}, document)


def cmd_dim_bound(cfg: RunConfig, strict: bool = False) -> CommandResult:
    """Evaluate the Lieb-Thirring constant, the constant C of the estimate and the dimension bound."""
    params = cfg.model
    f = build_forcing(cfg)
    bound = diag.fractal_dim_bound(f, params, strict=strict)
    document = to_plain({
        "C_LT": diag.lieb_thirring_constant(),
        "frak_C": diag.frak_C(params),
        "f_norm_delta": sobolev_norm(f, params.beta / 2, "delta_weighted", params.delta),
        "dimension_bound": bound,
        "hypotheses_hold": regime_report(params).dimension_bound_applicable,
    })
    lines = [f"{key}: {value}" for key, value in document.items()]
    return CommandResult(EXIT_OK, lines, {}, document)


def cmd_sweep(
        cells: List[Tuple[Dict[str, Any], RunConfig]],
        out_dir: Path,
        workers: int = 1,
        table_type: TableType = "csv",
        force: bool = False) -> CommandResult:
    """Evaluate every cell of a parameter grid; one deterministic row per cell.

    Cells run on a thread pool of `workers` threads, each writing only to its
    own cell_<index> subdirectory. Failures are recorded in the row's `error`
    column and the sweep continues.
    """
    out_dir = Path(out_dir)
    jobs = [(i, overrides, cfg, out_dir / f"cell_{i:03d}", force) for i, (overrides, cfg) in enumerate(cells)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: sweep_cell(*job), jobs))
    else:
        rows = [sweep_cell(*job) for job in jobs]
    table = write_table(rows, out_dir / f"{SWEEP_TABLE_FILE}.{table_type}", table_type, force, columns=SWEEP_COLUMNS)
    report = write_report({"cells": rows}, out_dir / SWEEP_REPORT_FILE, force)
    failed = sum(1 for r in rows if r["error"])
    lines = [f"✓ swept {len(rows)} cells ({failed} with errors)", f"  table: {table}"]
    return CommandResult(EXIT_OK, lines, {"table": table, "report": report}, {"cells": rows})


SWEEP_COLUMNS: List[str] = [
    "cell", "alpha", "beta", "gamma", "nu", "delta", "f_norm", "attractor", "uniqueness_known",
    "verdict", "lhs", "rhs_asymptotic", "residual_l2", "energy_ratio", "collapse_spread",
    "dimension_bound", "dimension_bound_applicable", "error",
]


def sweep_cell(index: int, overrides: Dict[str, Any], cfg: RunConfig, cell_dir: Path, force: bool = False) -> Dict[str, Any]:
    """One sweep row: regime, smallness verdict, stationary residual, collapse spread, dimension bound."""
    params = cfg.model
    k = derived_constants(params)
    regime = regime_report(params)
    row: Dict[str, Any] = {name: None for name in SWEEP_COLUMNS}
    row.update(cell=index, alpha=params.alpha, beta=params.beta, gamma=params.gamma, nu=params.nu,
               delta=params.delta, attractor=regime.attractor, uniqueness_known=regime.uniqueness_known,
               dimension_bound_applicable=regime.dimension_bound_applicable, error="")
    try:
        write_run_config(cfg, cell_dir / RUN_CONFIG_FILE, force)
        f = build_forcing(cfg)
        f_delta = sobolev_norm(f, params.beta / 2, "delta_weighted", params.delta)
        row["f_norm"] = sobolev_norm(f, params.beta / 2)
        row["dimension_bound"] = diag.fractal_bound_from_constants(f_delta, k.a, k.b, k.c, params.gamma)
        smallness = smallness_report(f, params, cfg.tol.smallness_C)
        row.update(verdict=smallness.verdict, lhs=smallness.lhs, rhs_asymptotic=smallness.rhs_asymptotic)
        solution = continuation_solve(f, params, cfg.tol.eps_schedule, cfg.tol.stationary,
                                      cfg.tol.max_iter, cfg.tol.relaxation)
        row.update(residual_l2=solution.residual_l2, energy_ratio=solution.energy_ratio)
        write_checkpoint(cell_dir / STATIONARY_CHECKPOINT_FILE, solution.field, params, 0.0, force)
        collapse = diag.singleton_attractor_check(
            f, params, n_starts=cfg.verify.starts, t_end=cfg.collapse_time, dt=cfg.sim.dt,
            tol=cfg.tol.collapse, U=solution.field, seed=cfg.sim.seed)
        row["collapse_spread"] = collapse.details["spread"]
    except Exception as error:
        logger.debug("sweep cell %d failed", index, exc_info=True)
        row["error"] = f"{type(error).__name__}: {error}"
    return to_plain(row)


def resolve_reference(cfg: RunConfig, f: VectorField) -> Optional[VectorField]:
    """sim.reference: 'none', 'stationary' (solved on the fly) or a checkpoint path."""
    if cfg.reference in ("", "none"):
        return None
    if cfg.reference == "stationary":
        return _solve(cfg, f).field
    checkpoint = read_checkpoint(cfg.reference)
    if checkpoint.field.grid != cfg.grid:
        raise ConfigError(f"reference checkpoint {cfg.reference} lives on a different grid")
    return checkpoint.field


#
# INTERNAL
#
def _solve(cfg: RunConfig, f: VectorField) -> StationarySolution:
    return continuation_solve(f, cfg.model, cfg.tol.eps_schedule, cfg.tol.stationary,
                              cfg.tol.max_iter, cfg.tol.relaxation)


def _decay_suite(cfg: RunConfig, f: VectorField, u0: VectorField, workers: int, C: Optional[float]) -> List[diag.CheckReport]:
    params = cfg.model
    C = cfg.tol.smallness_C if C is None else C
    smallness = smallness_report(f, params, C)
    solution = _solve(cfg, f)
    stationary = diag.CheckReport(
        name="stationary_solution",
        passed=solution.residual_l2 < cfg.tol.stationary and solution.energy_ratio <= 1 + cfg.tol.check,
        max_violation=max(solution.energy_ratio - 1.0, 0.0),
        details={"residual_l2": solution.residual_l2, "energy_ratio": solution.energy_ratio,
                 "verdict": smallness.verdict, "ratio_asymptotic": smallness.ratio_asymptotic})
    if smallness.verdict != "asymptotic":
        reason = f"smallness verdict is '{smallness.verdict}' with C={C}"
        return [stationary,
                diag.CheckReport("theorem4_decay", True, 0.0, {"reason": reason}, skipped=True),
                diag.CheckReport("singleton_attractor", True, 0.0, {"reason": reason}, skipped=True)]
    record = simulate(u0, f, params, cfg.sim, reference=solution.field)
    return [
        stationary,
        diag.theorem4_decay_check(record),
        diag.singleton_attractor_check(
            f, params, n_starts=cfg.verify.starts, t_end=cfg.collapse_time, dt=cfg.sim.dt,
            tol=cfg.tol.collapse, U=solution.field, seed=cfg.sim.seed, workers=workers),
    ]


def _snapshots(cfg: RunConfig, f: VectorField, u0: VectorField) -> List[VectorField]:
    """States at `verify.snapshots` evenly spaced steps of the configured run (including t=0)."""
    count = max(1, cfg.verify.snapshots)
    n_steps = cfg.sim.n_steps
    wanted = {round(i * n_steps / max(count - 1, 1)) for i in range(count)} if count > 1 else {0}
    return [u for n, _, u in iterate(u0, f, cfg.model, cfg.sim) if n in wanted]


def _lyapunov_suite(cfg: RunConfig, f: VectorField, u0: VectorField) -> List[diag.CheckReport]:
    params = cfg.model
    n = cfg.verify.family_size
    reports = []
    for i, u in enumerate(_snapshots(cfg, f, u0)):
        lowest = diag.lowest_mode_family(u, n, params.beta, params.delta)
        random = diag.gram_schmidt_delta(
            [random_divfree_field(cfg.sim.seed + 100 * i + j, None, u.grid) for j in range(n)],
            params.beta, params.delta)
        for label, family in (("lowest", lowest), ("random", random)):
            report = diag.lyapunov_trace_check(u, family, params)
            report.name = f"lyapunov_trace[{i}:{label}]"
            reports.append(report)
    short = SimulationConfig(dt=cfg.sim.dt, t_end=min(cfg.sim.t_end, 20 * cfg.sim.dt),
                             mollifier_epsilon=cfg.sim.mollifier_epsilon,
                             nonlinearity_enabled=cfg.sim.nonlinearity_enabled, seed=cfg.sim.seed)
    reports.append(diag.tangent_taylor_check(u0, f, params, short, seed=cfg.sim.seed))
    return reports


def _dimension_suite(cfg: RunConfig, f: VectorField, u0: VectorField) -> List[diag.CheckReport]:
    params = cfg.model
    applicable = regime_report(params).dimension_bound_applicable
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bound = diag.fractal_dim_bound(f, params)
    reports = [diag.CheckReport(
        name="fractal_dimension_bound",
        passed=bound >= 0,
        max_violation=0.0,
        details={"dimension_bound": bound, "frak_C": diag.frak_C(params),
                 "C_LT": diag.lieb_thirring_constant(), "hypotheses_hold": applicable})]
    family = diag.lowest_mode_family(u0, cfg.verify.family_size, params.beta, params.delta)
    reports.append(diag.lyapunov_trace_check(u0, family, params))
    return reports
