#!/usr/bin/env -S uv run --script
# /// script
# requires-python = ">=3.10"
# dependencies = [
#   "numpy",
#   "scipy",
#   "pandas",
#   "matplotlib",
#   "pydantic",
#   "pydantic-settings",
#   "python-dotenv",
#   "click",
#   "rich",
# ]
# ///
"""
Run the dissipation-protected gate experiments from the command line.

Usage:
    # Method 1: Direct execution (requires uv)
    ./zeno/zeno_run.py fig2

    # Method 2: As a module from the repository root
    python -m zeno.zeno_run fig2 --config configs/fig2.env

Examples:
    # Success probability sweep with two workers
    ./zeno/zeno_run.py --jobs 2 fig2

    # Single gate on a superposition input
    ./zeno/zeno_run.py cnot --initial-state 010+011 --omega 0.01

    # Emission-time scaling with a different seed and output directory
    ./zeno/zeno_run.py --seed 7 --out results/seed7 scaling

    # Rebuild a figure from its CSV
    ./zeno/zeno_run.py replot results/fig2.csv

Exit codes: 0 when every check passes, 1 when a check fails or a propagation
error stops the run (a JSON failure summary is printed and written next to
the CSV), 2 on usage or configuration errors.
"""

import json
import logging
import os
import sys
from pathlib import Path

import click
import pandas as pd
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from zeno.zeno_modules.config import ConfigError, load_experiment_config  # noqa: E402
from zeno.zeno_modules.data_types import (  # noqa: E402
    IntegratorInconsistencyError,
    InvalidInputError,
    PropagationError,
)
from zeno.zeno_modules.experiments import RUNNERS, Check, ExperimentResult, write_csv, write_failures  # noqa: E402
from zeno.zeno_modules.hilbert import basis_label  # noqa: E402
from zeno.zeno_modules.plotting import render_svg, replot  # noqa: E402
from zeno.zeno_modules.utils import generate_short_id, setup_logger  # noqa: E402

console = Console()


def _checks_table(result: ExperimentResult) -> Table:
    table = Table(show_header=True, box=None)
    table.add_column("Check", style="bold cyan")
    table.add_column("Result")
    table.add_column("Detail", style="dim")
    for check in result.checks:
        status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.name, status, check.detail)
    return table


def _summary_table(result: ExperimentResult) -> Table:
    table = Table(show_header=False, box=None, padding=(0, 1))
    table.add_column(style="bold cyan")
    table.add_column()
    summary = result.summary
    if result.experiment == "cnot":
        table.add_row("Duration T", f"{summary['duration']:.6g} / g")
        table.add_row("P0", f"{summary['p0']:.10f}")
        table.add_row("Fidelity", f"{summary['fidelity']:.10f}")
        for name, amplitude in summary["amplitudes"].items():
            table.add_row(f"<{name}|psi(T)>", f"{amplitude.real:+.6f} {amplitude.imag:+.6f}i")
        table.add_row("Regime flags", ", ".join(summary["flags"]) or "none")
    elif result.experiment == "dfs":
        for name, psi in summary["states"].items():
            terms = [
                f"{psi.amplitudes[k].real:+.4f}{str(basis_label(k, psi.space))}"
                for k in range(psi.dim)
                if abs(psi.amplitudes[k]) > 1e-12
            ]
            table.add_row(f"|{name}>", " ".join(terms))
        table.add_row("Complement rates", str(len(summary["rates"])))
        table.add_row("Delta T", f"{summary['delta_t']:.6g}")
        table.add_row("1/kappa, kappa/g^2", f"{summary['inverse_kappa']:.6g}, {summary['kappa_over_g2']:.6g}")
    elif result.experiment == "fig2":
        for gamma_cav, optimum in summary["optimum"].items():
            where = "interior" if optimum["interior"] else "grid edge"
            table.add_row(
                f"gamma_cav = {gamma_cav:g}",
                f"max P0 {optimum['p0_max']:.8f} at omega {optimum['omega']:.4g} ({where})",
            )
    else:
        for key, value in summary.items():
            table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    return table


def _run(ctx: click.Context, experiment: str, **extra) -> None:
    options = ctx.obj
    try:
        config = load_experiment_config(
            options["config"],
            experiment=experiment,
            out_dir=options["out"],
            seed=options["seed"],
            n_max=options["n_max"],
            jobs=options["jobs"],
            log_level=options["log_level"],
            **extra,
        )
    except (ConfigError, ValidationError) as e:
        raise click.UsageError(str(e)) from e

    out_dir = Path(config.out_dir)
    run_id = generate_short_id()
    logger = setup_logger("zeno", run_id, experiment, out_dir, config.log_level)
    logger.info(f"Run {run_id}: {experiment} (seed={config.seed}, n_max={config.n_max}, jobs={config.jobs})")

    try:
        with console.status(f"[bold yellow]Running {experiment}...[/bold yellow]"):
            result = RUNNERS[experiment](config)
    except InvalidInputError as e:
        raise click.UsageError(str(e)) from e
    except (PropagationError, IntegratorInconsistencyError) as e:
        logger.error(f"{experiment} stopped on a numerical error: {e}")
        failed = ExperimentResult(
            experiment=experiment,
            frame=pd.DataFrame(),
            checks=[Check(name="numerical_error", passed=False, detail=f"{type(e).__name__}: {e}")],
        )
        _fail(ctx, failed, out_dir, logger)

    csv_file = write_csv(result, out_dir)
    svg_file = render_svg(result.frame, csv_file.with_suffix(".svg"))

    console.print(Panel(_summary_table(result), title=f"[bold blue]{experiment}[/bold blue]", border_style="blue"))
    if result.checks:
        border = "green" if result.passed else "red"
        console.print(Panel(_checks_table(result), title=f"[bold {border}]Checks[/bold {border}]", border_style=border))
    console.print(f"[dim]CSV: {csv_file}  SVG: {svg_file}[/dim]")

    if not result.passed:
        _fail(ctx, result, out_dir, logger)


def _fail(ctx: click.Context, result: ExperimentResult, out_dir: Path, logger: logging.Logger) -> None:
    """Write and print the JSON failure summary, then exit 1."""
    failures_file = write_failures(result, out_dir)
    click.echo(json.dumps(result.failure_summary(), sort_keys=True))
    logger.error(f"{len(result.failures)} check(s) failed, summary in {failures_file}")
    ctx.exit(1)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Experiment config file")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory (default: results)")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Monte-Carlo seed")
@click.option("--n-max", type=click.IntRange(min=1), help="Cavity photon truncation")
@click.option("--jobs", type=click.IntRange(min=1), help="Worker threads")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
    help="Console log level",
)
@click.pass_context
def cli(ctx, config_path, out, seed, n_max, jobs, log_level):
    """Dissipation-protected CNOT gate experiments."""
    ctx.ensure_object(dict)
    ctx.obj.update(config=config_path, out=out, seed=seed, n_max=n_max, jobs=jobs, log_level=log_level)


@cli.command()
@click.pass_context
def fig2(ctx):
    """No-emission probability and fidelity over the Rabi-frequency grid."""
    _run(ctx, "fig2")


@cli.command()
@click.option("--omega", type=float, help="Rabi scale in units of g")
@click.option("--initial-state", help="Input state, e.g. 010 or 010+011")
@click.pass_context
def cnot(ctx, omega, initial_state):
    """A single gate pulse with a full report."""
    _run(ctx, "cnot", omega=omega, initial_state=initial_state)


@cli.command()
@click.pass_context
def scaling(ctx):
    """Mean first-emission time and gate duration against g / |omega|."""
    _run(ctx, "scaling")


@cli.command()
@click.pass_context
def vsystem(ctx):
    """Dark-period duration of the V system."""
    _run(ctx, "vsystem")


@cli.command()
@click.pass_context
def dfs(ctx):
    """List the decoherence-free states and the complement decay spectrum."""
    _run(ctx, "dfs")


@cli.command("replot")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def replot_command(csv_file):
    """Regenerate the SVG of an experiment from its CSV."""
    try:
        svg_file = replot(csv_file)
    except (InvalidInputError, KeyError) as e:
        raise click.UsageError(f"Cannot plot {csv_file}: {e}") from e
    console.print(f"[green]Wrote {svg_file}[/green]")


if __name__ == "__main__":
    cli()
