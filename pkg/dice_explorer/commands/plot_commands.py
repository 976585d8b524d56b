"""
Plot command: learning curves and the OPE chart from CSV logs.
"""

import logging

import click

from dice_explorer.core.config_manager import ConfigManager
from dice_explorer.core.plotting import write_plots
from dice_explorer.ui.styles import format_error, format_success, get_console

logger = logging.getLogger(__name__)


@click.command()
@click.argument("logs", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--out", "-o", default=None, help="Output directory (default: paths.output_dir)")
@click.pass_context
def plot(context, logs, out):
    """Write returns.svg (mean +-1 std) and ope.svg from logs sharing a step grid."""
    console = get_console(context)

    try:
        output_dir = out or ConfigManager.get(context.obj.get("config", {}), "paths.output_dir", "runs")
        written = write_plots(list(logs), output_dir)

        console.print()
        console.print(format_success(f"Plotted {len(logs)} log(s)"))
        for name, path in written.items():
            console.print(f"  [dim]{name}:[/dim] [cyan]{path}[/cyan]")
        console.print()

    except Exception as e:
        console.print()
        console.print(format_error(str(e)))
        logger.exception(f"Command failed: {str(e)}")
        console.print()
        raise click.Abort()
