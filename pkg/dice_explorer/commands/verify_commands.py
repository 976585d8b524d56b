"""
Verification command: runs an acceptance suite and reports every check.
"""

import logging

import click
from rich.table import Table

from dice_explorer.core.verification import SUITES, run_suite
from dice_explorer.ui.styles import format_error, format_number, format_verdict, format_warning, get_console

logger = logging.getLogger(__name__)


@click.command()
@click.argument("suite", type=click.Choice(list(SUITES)))
@click.option("--seed", type=click.IntRange(min=0), default=0, help="Seed for the suite's fixtures")
@click.pass_context
def verify(context, suite, seed):
    """Run an acceptance suite; exit status 1 if any check fails."""
    console = get_console(context)

    try:
        with console.status(f"Running {suite}..."):
            results = run_suite(suite, seed=seed)
    except Exception as e:
        console.print()
        console.print(format_error(str(e)))
        logger.exception(f"Suite {suite} crashed: {str(e)}")
        console.print()
        raise click.Abort()

    table = Table(title=f"verify {suite}", show_header=True, header_style="bold magenta")
    table.add_column("Check", style="cyan")
    table.add_column("Measured", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("Result")
    table.add_column("Detail", style="dim")
    for result in results:
        table.add_row(
            result.name,
            format_number(result.value),
            format_number(result.threshold),
            format_verdict(result.passed),
            result.detail,
        )
    console.print()
    console.print(table)

    failed = [result for result in results if not result.passed]
    console.print(f"[dim]{len(results) - len(failed)}/{len(results)} checks passed[/dim]")
    console.print()
    if failed:
        console.print(format_warning(f"{len(failed)} check(s) failed"))
        console.print()
        logger.warning(f"Suite {suite}: {len(failed)} check(s) failed")
        context.exit(1)
