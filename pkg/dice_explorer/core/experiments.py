"""
Multi-seed training runs and hyperparameter sweeps.

Framework-agnostic: called from the train/sweep commands, the REPL and
tests. Every run writes into an output directory without overwriting
earlier files.
"""

import copy
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from dice_explorer.core.config_manager import ConfigManager
from dice_explorer.core.envs import make_env
from dice_explorer.core.errors import ConfigError
from dice_explorer.core.policies import RandomPolicy, save_checkpoint
from dice_explorer.core.rng import Rng
from dice_explorer.core.run_log import TrainingLog, next_free_path, summarize, write_summary
from dice_explorer.core.trainer import Trainer, TrainingConfig, evaluate

logger = logging.getLogger(__name__)

# Sweepable names and the config key each one sets
SWEEP_PARAMETERS: Dict[str, str] = {
    "T": "dice.temperature",
    "beta_ub": "training.beta_ub",
    "beta_lb": "training.beta_lb",
    "alpha": "training.alpha",
}

Progress = Callable[[int, int], None]


def parse_list(text: str, kind: Callable[[str], Any] = int) -> List[Any]:
    """
    Parse "0,1,2" style option values.

    Raises:
        ValueError: If the list is empty or an item does not convert
    """
    items = [item.strip() for item in str(text).split(",") if item.strip()]
    if not items:
        raise ValueError(f"Expected a comma-separated list, got '{text}'")
    return [kind(item) for item in items]


def build_config(
    settings: Dict[str, Any],
    seed: int,
    mode: Optional[str] = None,
    steps: Optional[int] = None,
    env: Optional[str] = None,
) -> TrainingConfig:
    """Apply command-line overrides on top of the merged settings."""
    settings = copy.deepcopy(settings)
    ConfigManager.set(settings, "training.seed", seed)
    if mode is not None:
        ConfigManager.set(settings, "training.mode", mode)
    if steps is not None:
        ConfigManager.set(settings, "training.total_steps", steps)
    if env is not None:
        ConfigManager.set(settings, "training.env", env)
    return TrainingConfig.from_dict(settings)


def run_training(
    settings: Dict[str, Any],
    seeds: Sequence[int],
    output_dir: str,
    mode: Optional[str] = None,
    steps: Optional[int] = None,
    env: Optional[str] = None,
    on_seed_done: Optional[Progress] = None,
) -> Dict[str, Any]:
    """
    Train once per seed and write logs, checkpoints and a summary.

    Args:
        settings: Merged configuration dictionary
        seeds: Seeds to run, in order (duplicates allowed)
        output_dir: Directory for seed_<n>.csv, seed_<n>.npz and summary.csv
        mode, steps, env: Optional overrides of the training section
        on_seed_done: Called with (finished, total) after each seed

    Returns:
        Dictionary with results:
        {
            'status': 'success',
            'logs': List[str],
            'checkpoints': List[str],
            'summary': str,
            'final_return': float | None,
            'message': str,
        }

    Raises:
        ConfigError: If the configuration is invalid
        TrainingDivergedError: If a run hits a non-finite loss
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("At least one seed is required")
    configs = [build_config(settings, seed, mode, steps, env) for seed in seeds]

    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    logger.info(f"Training {len(seeds)} seed(s) into {output_path}")

    logs: List[TrainingLog] = []
    log_files: List[str] = []
    checkpoint_files: List[str] = []
    for index, config in enumerate(configs):
        trainer = Trainer(config)
        log = trainer.train()
        logs.append(log)
        log_files.append(str(log.to_csv(next_free_path(output_path / f"seed_{config.seed}.csv"))))
        checkpoint = save_checkpoint(
            trainer.target_policy, next_free_path(output_path / f"seed_{config.seed}.npz")
        )
        checkpoint_files.append(str(checkpoint))
        if on_seed_done is not None:
            on_seed_done(index + 1, len(configs))

    summary = summarize(logs)
    summary_file = write_summary(summary, next_free_path(output_path / "summary.csv"))
    final_return = summary[-1]["return_target_mean"] if summary else None

    return {
        "status": "success",
        "logs": log_files,
        "checkpoints": checkpoint_files,
        "summary": str(summary_file),
        "final_return": final_return,
        "message": f"Trained {len(seeds)} seed(s) in mode {configs[0].mode}",
    }


def run_sweep(
    settings: Dict[str, Any],
    parameter: str,
    values: Sequence[float],
    seeds: Sequence[int],
    output_dir: str,
    on_value_done: Optional[Progress] = None,
) -> Dict[str, Any]:
    """
    Train every seed for every value of one hyperparameter.

    Each value gets its own subdirectory (e.g. T_3.0/) holding the usual
    run_training output; sweep.csv stacks all summaries with the value
    as its leading column.

    Raises:
        ConfigError: Unknown parameter or empty value list
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(
            f"Unknown sweep parameter: {parameter}. Available: {', '.join(SWEEP_PARAMETERS)}"
        )
    values = [float(value) for value in values]
    if not values:
        raise ConfigError("At least one sweep value is required")

    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    sweep_file = next_free_path(output_path / "sweep.csv")
    groups: List[Dict[str, Any]] = []
    rows: List[Dict[str, Any]] = []

    for index, value in enumerate(values):
        logger.info(f"Sweep {parameter} = {value}")
        variant = copy.deepcopy(settings)
        ConfigManager.set(variant, SWEEP_PARAMETERS[parameter], value)
        result = run_training(variant, seeds, str(output_path / f"{parameter}_{value}"))
        logs = [TrainingLog.from_csv(path) for path in result["logs"]]
        for entry in summarize(logs):
            rows.append({parameter: value, **entry})
        groups.append({"value": value, **result})
        if on_value_done is not None:
            on_value_done(index + 1, len(values))

    write_summary(rows, str(sweep_file), leading=[parameter])
    return {
        "status": "success",
        "parameter": parameter,
        "groups": groups,
        "sweep": str(sweep_file),
        "message": f"Swept {parameter} over {len(values)} value(s)",
    }


def random_baseline(
    settings: Dict[str, Any], episodes: int, seed: int = 0, env: Optional[str] = None
) -> Dict[str, float]:
    """Average return of uniform random actions: the no-learning reference."""
    config = build_config(settings, seed, env=env)
    environment = make_env(config.env, {"gamma": config.gamma, **config.tabular})
    root = Rng(seed)
    policy = RandomPolicy(environment.action_size, root.spawn("random_policy"))
    result = evaluate(policy, environment, episodes, root.spawn("eval"))
    logger.info(f"Random baseline on {config.env}: {result.average_return:.3f}")
    return {"average_return": result.average_return, "average_reward": result.average_reward}
