"""
Evaluation commands: checkpoint rollouts and the off-policy evaluation check.
"""

import logging

import click
from rich.table import Table

from dice_explorer.core.envs import ENVIRONMENTS, make_env
from dice_explorer.core.experiments import build_config, random_baseline
from dice_explorer.core.policies import load_checkpoint
from dice_explorer.core.rng import Rng
from dice_explorer.core.run_log import TrainingLog, ope_check
from dice_explorer.core.trainer import evaluate
from dice_explorer.ui.styles import format_error, format_number, format_success, get_console

logger = logging.getLogger(__name__)


@click.command(name="eval")
@click.option("--checkpoint", "-c", default=None, help="Policy checkpoint (.npz) written by train")
@click.option("--random", "random_policy", is_flag=True, default=False, help="Evaluate uniform random actions instead")
@click.option("--episodes", "-n", type=click.IntRange(min=1), default=10, help="Evaluation episodes")
@click.option("--env", "-e", type=click.Choice(list(ENVIRONMENTS)), default=None, help="Environment")
@click.option("--seed", type=click.IntRange(min=0), default=0, help="Evaluation seed")
@click.pass_context
def eval_command(context, checkpoint, random_policy, episodes, env, seed):
    """Roll out a trained policy's mean action (or the random baseline)."""
    console = get_console(context)

    if not checkpoint and not random_policy:
        raise click.UsageError("Give --checkpoint FILE or --random")

    try:
        config = context.obj.get("config", {})
        if random_policy:
            result = random_baseline(config, episodes, seed=seed, env=env)
            label = "random policy"
            average_return, average_reward = result["average_return"], result["average_reward"]
        else:
            training = build_config(config, seed, env=env)
            environment = make_env(training.env, {"gamma": training.gamma, **training.tabular})
            policy = load_checkpoint(checkpoint)
            outcome = evaluate(policy, environment, episodes, Rng(seed).spawn("eval"))
            label = checkpoint
            average_return, average_reward = outcome.average_return, outcome.average_reward

        console.print()
        console.print(format_success(f"Evaluated {label} over {episodes} episode(s)"))
        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="white")
        table.add_row("Average return", format_number(average_return))
        table.add_row("Average per-step reward", format_number(average_reward))
        console.print(table)
        console.print()

    except Exception as e:
        console.print()
        console.print(format_error(str(e)))
        logger.exception(f"Command failed: {str(e)}")
        console.print()
        raise click.Abort()


@click.command(name="ope-check")
@click.argument("logs", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.pass_context
def ope_check_command(context, logs):
    """How often the dual estimate beats the raw batch reward, per log."""
    console = get_console(context)

    try:
        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Log", style="cyan")
        table.add_column("Points", justify="right")
        table.add_column("Win fraction", justify="right")
        table.add_column("|dual - on-policy|", justify="right")
        table.add_column("|batch - on-policy|", justify="right")
        for path in logs:
            report = ope_check(TrainingLog.from_csv(path))
            table.add_row(
                path,
                str(report.points),
                format_number(report.win_fraction),
                format_number(report.dual_error),
                format_number(report.batch_error),
            )
        console.print()
        console.print(table)
        console.print()

    except Exception as e:
        console.print()
        console.print(format_error(str(e)))
        logger.exception(f"Command failed: {str(e)}")
        console.print()
        raise click.Abort()
