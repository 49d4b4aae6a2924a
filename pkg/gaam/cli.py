#!/usr/bin/env python3
"""

CLI for GAAM

Run simulations, stationary solves, verification suites, parameter sweeps and
dimension-bound evaluations from YAML run configurations.

Exit status: 0 all checks pass, 1 check violation or file error, 2 usage or
config error, 3 numerical fault (blow-up guard, non-convergence, rank-deficient
family).

License: BSD 3-Clause

"""
#
# IMPORTS
#
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click

from gaam.attractor_diag import NoEntryError, RankDeficientError
from gaam.config_discovery import LOCAL_CONFIG_DIR, get_available_configs, init_config_with_example
from gaam.constants import (
    DEFAULT_OUTPUT_ROOT,
    EXIT_CHECK_FAILED,
    EXIT_NUMERICAL,
    EXIT_USAGE,
    OUTPUT_ROOT_ENVVAR,
    VERIFY_SUITES
)
from gaam.dynamics import BlowUpError, TrajectoryMismatchError
from gaam.harness import CommandResult, cmd_dim_bound, cmd_simulate, cmd_stationary, cmd_sweep, cmd_verify
from gaam.persistence import CheckpointError
from gaam.run_config import ConfigError, RunConfig, load_run_config, load_sweep
from gaam.spectral_core import DivergenceFreeError, GridMismatchError
from gaam.stationary import NonConvergenceError


#
# MAIN CLI GROUP
#
@click.group(invoke_without_command=True)
@click.option("--verbose", "-v", count=True, help="Log progress (-v info, -vv debug)")
@click.pass_context
def cli(ctx: click.Context, verbose: int) -> None:
    """GAAM - Simulate and verify the generalized Leray-alpha family.

    Run without a command to list available configurations.
    """
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if ctx.invoked_subcommand is None:
        _list_run_configs()


#
# SHARED OPTIONS
#
def _config_option(func: Callable) -> Callable:
    return click.option("--config", "-c", "config", type=str, default=None,
                        help="Run config name or path (default: default)")(func)


def _out_option(func: Callable) -> Callable:
    return click.option("--out", "-o", "out", type=str, default=None,
                        help=f"Output directory (default: out.dir, else ${OUTPUT_ROOT_ENVVAR} or "
                             f"{DEFAULT_OUTPUT_ROOT}/<config>/<command>)")(func)


def _force_option(func: Callable) -> Callable:
    return click.option("--force", "-f", is_flag=True, help="Overwrite existing files")(func)


#
# COMMANDS
#
@cli.command()
def init() -> None:
    """Initialize gaam_config directory with example configurations."""
    if init_config_with_example():
        click.echo(f"✓ Created {LOCAL_CONFIG_DIR}/ directory")
        click.echo(f"✓ Copied default.yaml to {LOCAL_CONFIG_DIR}/runs/example.yaml")
        click.echo(f"✓ Copied demo.yaml to {LOCAL_CONFIG_DIR}/sweeps/example.yaml")
        click.echo()
        click.echo("You can now customize the examples or add more configs:")
        click.echo("  gaam simulate -c example        # Use the example run config")
        click.echo("  gaam sweep example              # Use the example sweep")
    else:
        click.echo(f"Error: Could not initialize {LOCAL_CONFIG_DIR}/ directory", err=True)
        sys.exit(EXIT_CHECK_FAILED)


@cli.command(name="list")
@click.option("--runs", is_flag=True, help="List only run configurations")
@click.option("--sweeps", is_flag=True, help="List only sweep configurations")
def list_configs(runs: bool, sweeps: bool) -> None:
    """List available run and sweep configurations."""
    if not runs and not sweeps:
        runs = sweeps = True
    if runs:
        _list_run_configs()
    if sweeps:
        _list_sweep_configs()


@cli.command()
@_config_option
@_out_option
@click.option("--type", "-t", "table_type", type=click.Choice(["csv", "parquet"]), default="csv",
              help="Trajectory table format")
@_force_option
def simulate(config: Optional[str], out: Optional[str], table_type: str, force: bool) -> None:
    """Run a trajectory; write the diagnostics table and the final checkpoint.

    Examples:
      gaam simulate
      gaam simulate -c bardina --out runs/bardina
      gaam simulate -c example --type parquet --force
    """
    _run(lambda cfg: cmd_simulate(cfg, _out_dir(cfg, out, config, "simulate"), table_type, force), config)


@cli.command()
@_config_option
@_out_option
@click.option("--tol", type=float, default=None, help="Stationary residual tolerance (default: tol.stationary)")
@click.option("--C", "C", type=float, default=None, help="Generic constant of the smallness condition")
@_force_option
def stationary(config: Optional[str], out: Optional[str], tol: Optional[float], C: Optional[float], force: bool) -> None:
    """Solve for the stationary state by continuation and report the smallness verdict.

    Examples:
      gaam stationary
      gaam stationary -c bardina --tol 1e-12 --C 0.5
    """
    _run(lambda cfg: cmd_stationary(cfg, _out_dir(cfg, out, config, "stationary"), C, tol, force), config)


@cli.command()
@_config_option
@click.option("--suite", "-s", type=click.Choice(VERIFY_SUITES), required=True, help="Verification suite")
@_out_option
@click.option("--workers", "-w", type=click.IntRange(min=1), default=1, help="Worker threads for multi-start checks")
@click.option("--tol", type=float, default=None, help="Stationary residual tolerance (default: tol.stationary)")
@click.option("--C", "C", type=float, default=None, help="Generic constant of the smallness condition")
@_force_option
def verify(
        config: Optional[str], suite: str, out: Optional[str], workers: int,
        tol: Optional[float], C: Optional[float], force: bool) -> None:
    """Run a verification suite; exit 0 iff every check passes.

    Examples:
      gaam verify --suite energy
      gaam verify -c bardina --suite decay --C 1.0 --workers 4
    """
    _run(lambda cfg: cmd_verify(cfg, suite, _out_dir(cfg, out, config, "verify"), workers, tol, C,
                                config_name=config, force=force), config)


@cli.command()
@_config_option
@_out_option
@_force_option
def lyapunov(config: Optional[str], out: Optional[str], force: bool) -> None:
    """Trace and tangent-flow checks of the linearized flow (the lyapunov suite)."""
    _run(lambda cfg: cmd_verify(cfg, "lyapunov", _out_dir(cfg, out, config, "lyapunov"),
                                config_name=config, force=force), config)


@cli.command(name="dim-bound")
@_config_option
@click.option("--strict", is_flag=True, help="Fail when alpha >= 1, beta >= 2 does not hold")
def dim_bound(config: Optional[str], strict: bool) -> None:
    """Evaluate the fractal dimension bound of the attractor."""
    _run(lambda cfg: cmd_dim_bound(cfg, strict), config)


@cli.command()
@click.argument("sweep_config", required=False, default="demo", type=str)
@_out_option
@click.option("--workers", "-w", type=click.IntRange(min=1), default=1, help="Cells evaluated concurrently")
@click.option("--type", "-t", "table_type", type=click.Choice(["csv", "parquet"]), default="csv",
              help="Sweep table format")
@_force_option
def sweep(sweep_config: str, out: Optional[str], workers: int, table_type: str, force: bool) -> None:
    """Evaluate every cell of a parameter sweep.

    SWEEP_CONFIG: Sweep config name or path (default: demo)

    Examples:
      gaam sweep
      gaam sweep demo --workers 4 --out runs/demo
    """
    def action(loaded: Tuple[RunConfig, List[Tuple[Dict[str, Any], RunConfig]]]) -> CommandResult:
        base, cells = loaded
        out_dir = Path(out) if out else base.output_dir(f"sweep_{Path(sweep_config).stem}")
        return cmd_sweep(cells, out_dir, workers, table_type, force)

    _run(action, sweep_config, loader=load_sweep)


#
# INTERNAL HELPERS
#
def _out_dir(cfg: RunConfig, out: Optional[str], config: Optional[str], command: str) -> Path:
    if out:
        return Path(out)
    return cfg.output_dir(f"{Path(config or 'default').stem}/{command}")


def _run(
        action: Callable[[Any], CommandResult],
        config: Optional[str],
        loader: Callable[[Optional[str]], Any] = load_run_config) -> None:
    """Load the config, run the action, echo its lines and exit with the mapped status."""
    try:
        cfg = loader(config)
        result = action(cfg)
    except (ConfigError, click.UsageError) as error:
        click.echo(f"✗ Config error: {error}", err=True)
        sys.exit(EXIT_USAGE)
    except BlowUpError as error:
        click.echo(f"✗ Blow-up: {error}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except RankDeficientError as error:
        click.echo(f"✗ Rank-deficient family: {error}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except NoEntryError as error:
        click.echo(f"✗ Check failed: {error}", err=True)
        sys.exit(EXIT_CHECK_FAILED)
    except NonConvergenceError as error:
        click.echo(f"✗ Non-convergence: {error}", err=True)
        if error.continuation_path:
            click.echo("  partial continuation path (eps, residual):", err=True)
            for eps, residual in error.continuation_path:
                click.echo(f"    {eps:.6g}  {residual:.3e}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except FileExistsError as error:
        click.echo(f"✗ {error}", err=True)
        sys.exit(EXIT_CHECK_FAILED)
    except (CheckpointError, TrajectoryMismatchError, GridMismatchError, DivergenceFreeError, OSError) as error:
        click.echo(f"✗ Error: {error}", err=True)
        sys.exit(EXIT_CHECK_FAILED)
    except ValueError as error:
        click.echo(f"✗ Invalid input: {error}", err=True)
        sys.exit(EXIT_USAGE)
    for line in result.lines:
        click.echo(line)
    sys.exit(result.exit_code)


def _list_run_configs() -> None:
    """List available run configuration files with their model parameters."""
    click.echo("Run Configurations:")
    click.echo()
    configs = get_available_configs("runs")
    for label, key in (("📁 Local configs (gaam_config/runs/)", "local"), ("📦 Package configs", "package")):
        if not configs[key]:
            click.echo(f"{label}: None")
            click.echo()
            continue
        click.echo(f"{label}:")
        for config_name in configs[key]:
            try:
                cfg = load_run_config(config_name)
                m = cfg.model
                click.echo(f"  {config_name}")
                click.echo(f"    alpha={m.alpha} beta={m.beta} gamma={m.gamma} delta={m.delta} nu={m.nu}")
                click.echo(f"    grid: {m.dim}D, {m.modes_per_axis} modes per axis, dt={cfg.sim.dt}, t_end={cfg.sim.t_end}")
            except ConfigError as e:
                click.echo(f"  {config_name} (Error loading: {e})")
        click.echo()
    click.echo("Usage:")
    click.echo("  gaam simulate -c <config>         # Run a trajectory")
    click.echo("  gaam verify -c <config> -s energy # Run a verification suite")
    click.echo("  gaam init                         # Create gaam_config/")


def _list_sweep_configs() -> None:
    click.echo("Sweep Configurations:")
    click.echo()
    configs = get_available_configs("sweeps")
    for label, key in (("📁 Local configs (gaam_config/sweeps/)", "local"), ("📦 Package configs", "package")):
        names = configs[key]
        click.echo(f"{label}: {', '.join(names) if names else 'None'}")
    click.echo()
    click.echo("Usage:")
    click.echo("  gaam sweep <sweep_config>         # Evaluate every cell")


#
# ENTRY POINT
#
def main() -> None:
    """Main entry point."""
    cli()


if __name__ == "__main__":
    main()
