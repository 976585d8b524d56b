"""
Configuration commands: inspect, edit and persist the loaded settings.
"""

import copy
import logging

import click
import yaml
from rich.panel import Panel
from rich.syntax import Syntax

from dice_explorer.core.config_manager import ConfigManager
from dice_explorer.core.trainer import TrainingConfig
from dice_explorer.ui.styles import format_error, format_info, format_success, get_console

logger = logging.getLogger(__name__)


@click.group()
def config():
    """Show, edit and save the configuration."""
    pass


@config.command("show")
@click.option("--section", "-s", default=None, help="Only this section, e.g. training")
@click.pass_context
def config_show(context, section):
    """Display current configuration."""
    console = get_console(context)

    try:
        config_dict = context.obj.get("config", {})
        if not config_dict:
            console.print(format_info("No configuration loaded"))
            return
        shown = config_dict
        if section is not None:
            if section not in config_dict:
                raise KeyError(f"No section '{section}'. Available: {', '.join(config_dict)}")
            shown = {section: config_dict[section]}

        config_yaml = yaml.dump(shown, default_flow_style=False, sort_keys=False)
        panel = Panel(
            Syntax(config_yaml, "yaml", theme="monokai", line_numbers=False),
            title=f"[bold cyan]{context.obj.get('config_file', 'Configuration')}[/bold cyan]",
            border_style="cyan",
            padding=(1, 2),
        )
        console.print()
        console.print(panel)
        console.print()

    except Exception as e:
        console.print(format_error(str(e)))
        logger.exception(f"Failed to display config: {str(e)}")
        raise click.Abort()


@config.command("save")
@click.option("--file", "-f", required=True, help="Path to save config file")
@click.pass_context
def config_save(context, file):
    """Save current configuration to a YAML file."""
    console = get_console(context)

    try:
        config_dict = context.obj.get("config", {})
        if not config_dict:
            console.print(format_error("No configuration to save"))
            raise click.Abort()

        ConfigManager.save(config_dict, file)
        console.print()
        console.print(format_success(f"Configuration saved to: {file}"))
        console.print()

    except click.Abort:
        raise
    except Exception as e:
        console.print(format_error(f"Failed to save config: {str(e)}"))
        logger.exception(f"Failed to save config: {str(e)}")
        raise click.Abort()


@config.command("set")
@click.option("--key", "-k", required=True, help="Dot-notation key, e.g. dice.temperature")
@click.option("--value", "-v", required=True, help="Value (YAML scalar or list, e.g. 3.0 or [32, 32])")
@click.pass_context
def config_set(context, key, value):
    """Set a configuration value for this session (validated before it applies)."""
    console = get_console(context)

    try:
        config_dict = context.obj.get("config", {})
        if not config_dict:
            console.print(format_error("No configuration loaded"))
            raise click.Abort()

        parsed = yaml.safe_load(value)
        candidate = copy.deepcopy(config_dict)
        ConfigManager.set(candidate, key, parsed)
        TrainingConfig.from_dict(candidate)

        ConfigManager.set(config_dict, key, parsed)
        console.print()
        console.print(format_success(f"Set {key} = {parsed!r}"))
        console.print()

    except click.Abort:
        raise
    except Exception as e:
        console.print(format_error(f"Failed to set config: {str(e)}"))
        logger.exception(f"Failed to set config: {str(e)}")
        raise click.Abort()
