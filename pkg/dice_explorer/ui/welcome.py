"""
Welcome and goodbye screens for the interactive shell.
"""

from rich.console import Console
from rich.panel import Panel
from rich.text import Text

BANNER = r"""
  ____ ___ ____ _____
 |  _ \_ _/ ___| ____|  _____  ___ __ | | ___  _ __ ___ _ __
 | | | | | |   |  _|   / _ \ \/ / '_ \| |/ _ \| '__/ _ \ '__|
 | |_| | | |___| |___ |  __/>  <| |_) | | (_) | | |  __/ |
 |____/___\____|_____| \___/_/\_\ .__/|_|\___/|_|  \___|_|
                                |_|
"""


def show_welcome(
    console: Console, app_name: str, version: str, config_file: str, log_file: str
) -> None:
    """
    Banner, version and where config and logs live.

    Args:
        console: Rich console instance
        app_name: Application name
        version: Application version
        config_file: Path of the loaded config (or a note that defaults are used)
        log_file: Path of the diagnostic log
    """
    text = Text()
    text.append(BANNER, style="bold cyan")
    text.append(f"\n  {app_name} ", style="bold white")
    text.append(f"v{version}", style="bold yellow")
    text.append("\n  Optimistic actor-critic with distribution correction", style="dim")
    text.append("\n  Type ", style="dim")
    text.append("/help", style="bold green")
    text.append(" for commands | ", style="dim")
    text.append("/quit", style="bold red")
    text.append(" to exit", style="dim")

    console.print(Panel(text, border_style="bright_blue", padding=(1, 2)))
    console.print()
    console.print(f"[dim]Config loaded:[/dim] [cyan]{config_file}[/cyan]")
    console.print(f"[dim]Logging to:[/dim] [cyan]{log_file}[/cyan]")
    console.print("[bold green]Ready![/bold green] [dim](try /verify bounds)[/dim]")
    console.print()


def show_goodbye(console: Console) -> None:
    """Goodbye line when the shell exits."""
    console.print()
    console.print("[bold yellow]Goodbye![/bold yellow]")
