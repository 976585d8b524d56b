"""
Learning-curve and OPE charts as standalone SVG files.
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from dice_explorer.core.run_log import TrainingLog, check_step_grid, next_free_path, sample_std  # noqa: E402

logger = logging.getLogger(__name__)

GOLDEN_RATIO = (np.sqrt(5.0) - 1.0) / 2.0
FIGURE_WIDTH = 6.0

OPE_SERIES = {
    "dual_estimate": "Dual estimate",
    "batch_reward": "Batch reward",
    "onpolicy_reward": "On-policy reward",
}


def _axes(title: str, ylabel: str):
    figure = plt.figure(figsize=(FIGURE_WIDTH, FIGURE_WIDTH * GOLDEN_RATIO), facecolor="w")
    ax = figure.add_subplot(1, 1, 1)
    ax.set_title(title)
    ax.set_xlabel("Environment steps")
    ax.set_ylabel(ylabel)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    return figure, ax


def mean_and_band(logs: Sequence[TrainingLog], column: str):
    """
    Per-step mean and sample standard deviation over runs.

    Non-finite entries are ignored; a step with no finite value stays NaN.
    """
    stacked = np.stack([log.column(column) for log in logs])
    finite = np.isfinite(stacked)
    counts = finite.sum(axis=0)
    masked = np.where(finite, stacked, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, masked.sum(axis=0) / np.maximum(counts, 1), np.nan)
    std = np.zeros_like(mean)
    for index in range(stacked.shape[1]):
        values = stacked[finite[:, index], index]
        if values.size:
            std[index] = sample_std(values)
    return mean, std


def learning_curve_figure(logs: Sequence[TrainingLog]) -> Figure:
    """
    Return curves of the target (and exploration) policy with +-1 std bands.

    Raises:
        ValueError: If the logs do not share a step grid
    """
    steps = np.array(check_step_grid(logs), dtype=np.float64)
    figure, ax = _axes(f"Evaluation return ({len(logs)} run(s))", "Average return")
    for column, label in (("return_target", "Target policy"), ("return_explore", "Exploration policy")):
        mean, std = mean_and_band(logs, column)
        if not np.any(np.isfinite(mean)):
            continue
        line = ax.plot(steps, mean, label=label, linewidth=1.2)[0]
        ax.fill_between(steps, mean - std, mean + std, color=line.get_color(), alpha=0.2, linewidth=0)
    ax.legend(frameon=False)
    return figure


def ope_figure(logs: Sequence[TrainingLog]) -> Figure:
    """
    Dual estimate, batch reward and on-policy reward per step: exactly three series.

    Raises:
        ValueError: If the logs do not share a step grid
    """
    steps = np.array(check_step_grid(logs), dtype=np.float64)
    figure, ax = _axes("Off-policy evaluation", "Average per-step reward")
    for column, label in OPE_SERIES.items():
        mean, std = mean_and_band(logs, column)
        line = ax.plot(steps, mean, label=label, linewidth=1.2)[0]
        ax.fill_between(steps, mean - std, mean + std, color=line.get_color(), alpha=0.15, linewidth=0)
    ax.legend(frameon=False)
    return figure


def write_plots(log_paths: Sequence[str], output_dir: str) -> Dict[str, str]:
    """
    Read CSV logs and write returns.svg and ope.svg.

    Returns:
        {"returns": path, "ope": path}

    Raises:
        FileNotFoundError: If a log is missing
        ValueError: If the logs do not share a step grid or are empty
    """
    logs: List[TrainingLog] = [TrainingLog.from_csv(path) for path in log_paths]
    check_step_grid(logs)
    if not logs[0].steps:
        raise ValueError("Logs contain no evaluation rows")

    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    written = {}
    for name, builder in (("returns", learning_curve_figure), ("ope", ope_figure)):
        figure = builder(logs)
        target = next_free_path(output_path / f"{name}.svg")
        figure.savefig(target, format="svg", bbox_inches="tight")
        plt.close(figure)
        written[name] = str(target)
        logger.info(f"Plot written: {target}")
    return written
