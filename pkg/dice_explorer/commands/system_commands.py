"""
Shell housekeeping: help, quit, exit.
"""

import click
from click_repl import ExitReplException
from rich.table import Table

from dice_explorer.core.trainer import MODES
from dice_explorer.core.verification import SUITES
from dice_explorer.ui.styles import format_info, get_console
from dice_explorer.ui.welcome import show_goodbye


@click.command()
@click.pass_context
def help_command(context):
    """Show available commands, training modes and verification suites."""
    console = get_console(context)

    console.print()
    table = Table(title="Commands", show_header=True, header_style="bold magenta")
    table.add_column("Command", style="cyan", width=20)
    table.add_column("Description", style="white")

    group = getattr(context.parent, "command", None)
    for name, command in sorted(getattr(group, "commands", {}).items()):
        table.add_row(f"/{name}", command.get_short_help_str(limit=80) or "No description available")
    console.print(table)

    console.print(f"[dim]Modes:[/dim] {', '.join(MODES)}")
    console.print(f"[dim]Suites:[/dim] {', '.join(SUITES)}")
    console.print()
    console.print(format_info("For detailed help on a command: /command --help"))
    console.print()


@click.command()
@click.pass_context
def quit_command(context):
    """Leave the shell."""
    show_goodbye(get_console(context))
    raise ExitReplException()


@click.command()
@click.pass_context
def exit_command(context):
    """Leave the shell (alias for quit)."""
    show_goodbye(get_console(context))
    raise ExitReplException()
