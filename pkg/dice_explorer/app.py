"""
Main entry point: one click group serving both CLI mode and the interactive shell.
"""

import logging
import sys
from pathlib import Path

import click
from click.core import ParameterSource
from click_repl import ExitReplException, repl
from prompt_toolkit.completion import WordCompleter
from prompt_toolkit.history import FileHistory
from prompt_toolkit.styles import Style
from rich.console import Console

from dice_explorer.commands.config_commands import config
from dice_explorer.commands.eval_commands import eval_command, ope_check_command
from dice_explorer.commands.plot_commands import plot
from dice_explorer.commands.system_commands import exit_command, help_command, quit_command
from dice_explorer.commands.train_commands import sweep, train
from dice_explorer.commands.verify_commands import verify
from dice_explorer.core.config_manager import ConfigManager
from dice_explorer.core.logging_setup import setup_logging
from dice_explorer.ui.styles import APP_THEME, format_error
from dice_explorer.ui.welcome import show_goodbye, show_welcome

console = Console(theme=APP_THEME)

APP_NAME = "DICE Explorer"
APP_VERSION = "1.0.0"
DEFAULT_CONFIG = "config.yaml"
DEFAULT_LOG_FILE = "logs/dice_explorer.log"
HISTORY_FILE = ".dice_explorer_history"

COMPLETION_MENU_HEIGHT = 8


@click.group(invoke_without_command=True)
@click.option("--config", "-c", default=DEFAULT_CONFIG, help="Path to config file (YAML)")
@click.option("--repl-mode", is_flag=True, default=False, help="Start the interactive shell")
@click.pass_context
def cli(context, config, repl_mode):
    """
    DICE Explorer: optimistic actor-critic with DICE distribution correction.

    Run without arguments to start the interactive shell.
    Run with a command for CLI mode.
    """
    context.ensure_object(dict)
    context.obj["console"] = console

    explicit = context.get_parameter_source("config") is not ParameterSource.DEFAULT
    if not Path(config).exists():
        if explicit:
            raise click.BadParameter(f"Config file not found: {config}", param_hint="--config")
        config_dict = ConfigManager.get_defaults()
        config_label = "defaults (no config.yaml)"
    else:
        try:
            config_dict = ConfigManager.merge_with_defaults(ConfigManager.load(config))
        except Exception as e:
            console.print(format_error(f"Error loading config: {str(e)}"))
            sys.exit(1)
        config_label = config

    context.obj["config"] = config_dict
    context.obj["config_file"] = config_label

    log_file = ConfigManager.get(config_dict, "logging.file", DEFAULT_LOG_FILE)
    log_level = ConfigManager.get(config_dict, "logging.level", "INFO")
    # stderr logging would interleave with the shell prompt unless asked for
    console_enabled = context.invoked_subcommand is not None or bool(
        ConfigManager.get(config_dict, "logging.console_enabled", False)
    )
    try:
        setup_logging(log_file, log_level, console_enabled)
    except ValueError as e:
        console.print(format_error(str(e)))
        sys.exit(1)

    if context.invoked_subcommand is None or repl_mode:
        start_repl(context)


def start_repl(context: click.Context) -> None:
    """
    Run the interactive shell with / prefixed commands and completion.

    Args:
        context: Click context holding config and console

    Raises:
        SystemExit: On /quit, /exit, Ctrl+C or Ctrl+D
    """
    config_dict = context.obj["config"]
    show_welcome(
        console,
        ConfigManager.get(config_dict, "app.name", APP_NAME),
        ConfigManager.get(config_dict, "app.version", APP_VERSION),
        context.obj["config_file"],
        ConfigManager.get(config_dict, "logging.file", DEFAULT_LOG_FILE),
    )

    commands = getattr(context.command, "commands", {})
    completer = WordCompleter(
        [f"/{name}" for name in sorted(commands)],
        meta_dict={f"/{name}": command.get_short_help_str(limit=60) for name, command in commands.items()},
        sentence=True,
    )
    completion_style = Style.from_dict(
        {
            "completion-menu": "",
            "completion-menu.completion": "noinherit #5fafff",
            "completion-menu.completion.current": "noinherit #00ffff bold",
            "completion-menu.meta.completion": "noinherit #808080",
            "completion-menu.meta.completion.current": "noinherit #ffffff",
        }
    )
    prompt_kwargs = {
        "message": "> ",
        "history": FileHistory(HISTORY_FILE),
        "completer": completer,
        "complete_while_typing": True,
        "style": completion_style,
        "complete_style": "COLUMN",
        "reserve_space_for_menu": COMPLETION_MENU_HEIGHT,
    }

    # click_repl has no hook for rewriting input lines; wrap its internal
    # dispatcher. Pinned click-repl>=0.3,<0.4 in requirements.txt.
    import click_repl._repl as repl_module

    if not hasattr(repl_module, "_execute_internal_and_sys_cmds"):
        raise RuntimeError(
            "click_repl API has changed; dice_explorer requires click-repl>=0.3.0,<0.4.0"
        )
    original_execute = repl_module._execute_internal_and_sys_cmds

    def execute_with_slash_stripping(
        command: str, allow_internal_commands: bool, allow_system_commands: bool
    ):
        """Strip the leading / and report click usage errors without leaving the shell."""
        if command.startswith("/"):
            command = command[1:]
        try:
            result = original_execute(command, allow_internal_commands, allow_system_commands)
            console.print()
            return result
        except click.exceptions.ClickException as e:
            console.print()
            console.print(f"[red]Error:[/red] {e.format_message()}")
            name = command.split()[0] if command.split() else ""
            console.print(f"[dim]For full usage:[/dim] [cyan]/{name} --help[/cyan]")
            console.print()
            return None

    repl_module._execute_internal_and_sys_cmds = execute_with_slash_stripping
    try:
        repl(context, prompt_kwargs=prompt_kwargs)
    except (KeyboardInterrupt, EOFError):
        show_goodbye(console)
        sys.exit(0)
    except ExitReplException:
        sys.exit(0)
    finally:
        repl_module._execute_internal_and_sys_cmds = original_execute


cli.add_command(train, name="train")
cli.add_command(eval_command, name="eval")
cli.add_command(ope_check_command, name="ope-check")
cli.add_command(verify, name="verify")
cli.add_command(sweep, name="sweep")
cli.add_command(plot, name="plot")
cli.add_command(config, name="config")
cli.add_command(help_command, name="help")
cli.add_command(quit_command, name="quit")
cli.add_command(exit_command, name="exit")


def main():
    """Entry point for the application."""
    cli(obj={})


if __name__ == "__main__":
    main()
