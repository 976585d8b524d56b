"""
Training commands: multi-seed runs and hyperparameter sweeps.
"""

import logging

import click
from rich.table import Table

from dice_explorer.core.config_manager import ConfigManager
from dice_explorer.core.envs import ENVIRONMENTS
from dice_explorer.core.errors import TrainingDivergedError
from dice_explorer.core.experiments import SWEEP_PARAMETERS, parse_list, run_sweep, run_training
from dice_explorer.core.trainer import MODES
from dice_explorer.ui.styles import format_error, format_number, format_success, get_console

logger = logging.getLogger(__name__)


def _seed_list(context, parameter, value):
    if value is None:
        return None
    try:
        seeds = parse_list(value, int)
    except ValueError as e:
        raise click.BadParameter(str(e)) from e
    if any(seed < 0 for seed in seeds):
        raise click.BadParameter("Seeds must be non-negative")
    return seeds


def _value_list(context, parameter, value):
    try:
        return parse_list(value, float)
    except ValueError as e:
        raise click.BadParameter(str(e)) from e


def _output_dir(context: click.Context, out) -> str:
    if out:
        return out
    return ConfigManager.get(context.obj.get("config", {}), "paths.output_dir", "runs")


def _report_divergence(console, error: TrainingDivergedError) -> None:
    console.print(format_error(str(error)))
    if error.diagnostics:
        table = Table(title="Last evaluation row", show_header=True, header_style="bold magenta")
        table.add_column("Column", style="cyan")
        table.add_column("Value", style="white")
        for name, value in error.diagnostics.items():
            table.add_row(name, format_number(value))
        console.print(table)


@click.command()
@click.option("--out", "-o", default=None, help="Output directory (default: paths.output_dir)")
@click.option("--seeds", "-s", default="0", callback=_seed_list, help="Comma-separated seeds, e.g. 0,1,2")
@click.option("--mode", "-m", type=click.Choice(list(MODES)), default=None, help="Training mode")
@click.option("--steps", type=click.IntRange(min=0), default=None, help="Environment steps per seed")
@click.option("--env", "-e", type=click.Choice(list(ENVIRONMENTS)), default=None, help="Environment")
@click.pass_context
def train(context, out, seeds, mode, steps, env):
    """Train one run per seed; writes CSV logs, checkpoints and a summary."""
    console = get_console(context)

    try:
        config = context.obj.get("config", {})
        output_dir = _output_dir(context, out)

        with console.status(f"Training {len(seeds)} seed(s)...") as status:
            result = run_training(
                config,
                seeds,
                output_dir,
                mode=mode,
                steps=steps,
                env=env,
                on_seed_done=lambda done, total: status.update(f"Trained {done}/{total} seed(s)..."),
            )

        console.print()
        console.print(format_success(result["message"]))

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Property", style="cyan")
        table.add_column("Value", style="white")
        for log_file in result["logs"]:
            table.add_row("Log", log_file)
        for checkpoint in result["checkpoints"]:
            table.add_row("Checkpoint", checkpoint)
        table.add_row("Summary", result["summary"])
        table.add_row("Final target return (mean)", format_number(result["final_return"]))
        console.print(table)
        console.print()

    except TrainingDivergedError as e:
        console.print()
        _report_divergence(console, e)
        logger.exception(f"Training diverged: {str(e)}")
        raise click.Abort()

    except Exception as e:
        console.print()
        console.print(format_error(str(e)))
        logger.exception(f"Command failed: {str(e)}")
        console.print()
        raise click.Abort()


@click.command()
@click.option(
    "--parameter", "-p", required=True, type=click.Choice(list(SWEEP_PARAMETERS)),
    help="Hyperparameter to sweep",
)
@click.option("--values", "-v", required=True, callback=_value_list, help="Comma-separated values, e.g. 2.0,3.0,5.0")
@click.option("--seeds", "-s", default="0", callback=_seed_list, help="Comma-separated seeds")
@click.option("--out", "-o", default=None, help="Output directory (default: paths.output_dir)")
@click.pass_context
def sweep(context, parameter, values, seeds, out):
    """Train every seed for each value of one hyperparameter."""
    console = get_console(context)

    try:
        config = context.obj.get("config", {})
        with console.status(f"Sweeping {parameter}...") as status:
            result = run_sweep(
                config,
                parameter,
                values,
                seeds,
                _output_dir(context, out),
                on_value_done=lambda done, total: status.update(f"Finished {done}/{total} value(s)..."),
            )

        console.print()
        console.print(format_success(result["message"]))

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column(parameter, style="cyan")
        table.add_column("Final target return (mean)", style="white")
        table.add_column("Summary", style="dim")
        for group in result["groups"]:
            table.add_row(format_number(group["value"]), format_number(group["final_return"]), group["summary"])
        console.print(table)
        console.print(f"[dim]Combined:[/dim] [cyan]{result['sweep']}[/cyan]")
        console.print()

    except TrainingDivergedError as e:
        console.print()
        _report_divergence(console, e)
        logger.exception(f"Sweep diverged: {str(e)}")
        raise click.Abort()

    except Exception as e:
        console.print()
        console.print(format_error(str(e)))
        logger.exception(f"Command failed: {str(e)}")
        console.print()
        raise click.Abort()
