"""
Per-evaluation training log, its CSV form, multi-seed summaries and the
off-policy evaluation quality check.
"""

import csv
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class LogRow:
    step: int
    return_target: float
    return_explore: float
    dual_estimate: float
    batch_reward: float
    onpolicy_reward: float
    loss_nu: float
    loss_zeta: float
    loss_lambda: float
    lam: float
    mean_zeta: float


# The CSV header spells lam as "lambda"
COLUMNS: List[str] = ["lambda" if f.name == "lam" else f.name for f in fields(LogRow)]
METRICS: List[str] = COLUMNS[1:]


class TrainingLog:
    """Rows appended in strictly increasing step order."""

    def __init__(self, rows: Sequence[LogRow] = ()):
        self.rows: List[LogRow] = []
        for row in rows:
            self.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: LogRow) -> None:
        if self.rows and row.step <= self.rows[-1].step:
            raise ValueError(
                f"Log steps must increase: {row.step} after {self.rows[-1].step}"
            )
        self.rows.append(row)

    @property
    def steps(self) -> List[int]:
        return [row.step for row in self.rows]

    def column(self, name: str) -> np.ndarray:
        attribute = "lam" if name == "lambda" else name
        return np.array([getattr(row, attribute) for row in self.rows], dtype=np.float64)

    def to_csv(self, path: str) -> Path:
        """Write header plus one line per row (header only for an empty log)."""
        csv_path = Path(path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(COLUMNS)
            for row in self.rows:
                values = list(asdict(row).values())
                writer.writerow([values[0], *(repr(float(value)) for value in values[1:])])
        logger.info(f"Training log written: {csv_path} ({len(self.rows)} rows)")
        return csv_path

    @classmethod
    def from_csv(cls, path: str) -> "TrainingLog":
        """
        Read a log written by to_csv.

        Raises:
            FileNotFoundError: If the file is missing
            ValueError: If the header does not match the log schema
        """
        csv_path = Path(path)
        if not csv_path.exists():
            raise FileNotFoundError(f"Log file not found: {path}")
        with open(csv_path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != COLUMNS:
                raise ValueError(f"Unexpected log header in {path}: {header}")
            rows = [
                LogRow(int(values[0]), *(float(v) for v in values[1:]))
                for values in reader
                if values
            ]
        return cls(rows)


def next_free_path(path: Path) -> Path:
    """path itself if unused, otherwise the first free stem_1, stem_2, ..."""
    path = Path(path)
    if not path.exists():
        return path
    index = 1
    while True:
        candidate = path.with_name(f"{path.stem}_{index}{path.suffix}")
        if not candidate.exists():
            return candidate
        index += 1


def check_step_grid(logs: Sequence[TrainingLog]) -> List[int]:
    """
    Common step grid of several logs.

    Raises:
        ValueError: If no logs are given or their steps differ
    """
    if not logs:
        raise ValueError("At least one log is required")
    grid = logs[0].steps
    for log in logs[1:]:
        if log.steps != grid:
            raise ValueError("Logs do not share the same evaluation steps")
    return grid


def sample_std(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sample standard deviation (ddof=1); zero when there is a single run."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[axis] < 2:
        return np.zeros(np.delete(values.shape, axis))
    return values.std(axis=axis, ddof=1)


def summarize(logs: Sequence[TrainingLog]) -> List[Dict[str, float]]:
    """
    Mean and sample standard deviation of every metric at every step.

    Returns:
        One dict per step: {"step", "<metric>_mean", "<metric>_std", ...}
    """
    grid = check_step_grid(logs)
    summary = []
    stacked = {name: np.stack([log.column(name) for log in logs]) for name in METRICS}
    for index, step in enumerate(grid):
        entry: Dict[str, float] = {"step": step}
        for name in METRICS:
            values = stacked[name][:, index]
            entry[f"{name}_mean"] = float(np.mean(values))
            entry[f"{name}_std"] = float(sample_std(values))
        summary.append(entry)
    return summary


def summary_columns() -> List[str]:
    columns = ["step"]
    for name in METRICS:
        columns.extend([f"{name}_mean", f"{name}_std"])
    return columns


def write_summary(
    summary: Sequence[Dict[str, float]], path: str, leading: Sequence[str] = ()
) -> Path:
    """Write summary rows; `leading` names extra key columns such as a swept value."""
    csv_path = Path(path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=[*leading, *summary_columns()])
        writer.writeheader()
        for entry in summary:
            writer.writerow(entry)
    logger.info(f"Summary written: {csv_path}")
    return csv_path


@dataclass
class OpeReport:
    win_fraction: float
    dual_error: float
    batch_error: float
    points: int


def ope_check(log: TrainingLog) -> OpeReport:
    """
    How often the dual estimate beats the raw batch reward.

    A point is a win when |dual - onpolicy| < |batch - onpolicy|; ties
    lose. Rows with a non-finite reward column are skipped.

    Returns:
        OpeReport with the win fraction and both mean absolute errors

    Raises:
        ValueError: If no usable rows remain
    """
    dual = log.column("dual_estimate")
    batch = log.column("batch_reward")
    onpolicy = log.column("onpolicy_reward")
    usable = np.isfinite(dual) & np.isfinite(batch) & np.isfinite(onpolicy)
    if not np.any(usable):
        raise ValueError("Log has no rows with all three reward columns")
    dual_error = np.abs(dual[usable] - onpolicy[usable])
    batch_error = np.abs(batch[usable] - onpolicy[usable])
    report = OpeReport(
        win_fraction=float(np.mean(dual_error < batch_error)),
        dual_error=float(np.mean(dual_error)),
        batch_error=float(np.mean(batch_error)),
        points=int(usable.sum()),
    )
    logger.info(f"OPE check: {report}")
    return report

