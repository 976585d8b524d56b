"""
Tests for multi-seed training, sweeps and the random baseline.
"""

import csv
from pathlib import Path

import pytest

from dice_explorer.core.errors import ConfigError
from dice_explorer.core.experiments import (
    SWEEP_PARAMETERS,
    build_config,
    parse_list,
    random_baseline,
    run_sweep,
    run_training,
)
from dice_explorer.core.policies import load_checkpoint
from dice_explorer.core.run_log import TrainingLog


class TestParseList:
    """Tests for comma-separated option values."""

    def test_ints_and_floats(self):
        """Whitespace and trailing commas are tolerated."""
        assert parse_list("0, 1,2,") == [0, 1, 2]
        assert parse_list("1.0,3", float) == [1.0, 3.0]

    def test_empty(self):
        """An empty list is an error."""
        with pytest.raises(ValueError):
            parse_list(" , ")

    def test_bad_item(self):
        """Items must convert."""
        with pytest.raises(ValueError):
            parse_list("1,x")


class TestBuildConfig:
    """Tests for command-line overrides."""

    def test_overrides_apply(self, small_settings):
        """Seed, mode, steps and env land in the training config."""
        config = build_config(small_settings, seed=7, mode="sac", steps=5, env="pendulum")
        assert (config.seed, config.mode, config.total_steps, config.env) == (7, "sac", 5, "pendulum")

    def test_settings_not_mutated(self, small_settings):
        """The caller's dictionary is left alone."""
        build_config(small_settings, seed=7, mode="sac")
        assert small_settings["training"]["mode"] == "ours"

    def test_invalid_mode(self, small_settings):
        """Unknown modes surface as ConfigError."""
        with pytest.raises(ConfigError):
            build_config(small_settings, seed=0, mode="greedy")


class TestRunTraining:
    """Tests for training several seeds."""

    def test_writes_logs_checkpoints_and_summary(self, small_settings, tmp_path):
        """One CSV and one checkpoint per seed plus a summary."""
        progress = []
        result = run_training(
            small_settings, [0, 1], str(tmp_path / "out"), on_seed_done=lambda done, total: progress.append((done, total))
        )
        assert result["status"] == "success"
        assert [Path(path).name for path in result["logs"]] == ["seed_0.csv", "seed_1.csv"]
        assert all(Path(path).exists() for path in result["checkpoints"])
        assert Path(result["summary"]).exists()
        assert progress == [(1, 2), (2, 2)]
        assert TrainingLog.from_csv(result["logs"][0]).steps == [10, 20]
        assert load_checkpoint(result["checkpoints"][0]).observation_size == 3
        assert result["final_return"] is not None

    def test_duplicate_seed_does_not_overwrite(self, small_settings, tmp_path):
        """Running a seed twice keeps both logs."""
        result = run_training(small_settings, [0, 0], str(tmp_path / "out"))
        assert [Path(path).name for path in result["logs"]] == ["seed_0.csv", "seed_0_1.csv"]

    def test_zero_steps(self, small_settings, tmp_path):
        """total_steps = 0 gives header-only logs and no final return."""
        result = run_training(small_settings, [0], str(tmp_path / "out"), steps=0)
        assert len(TrainingLog.from_csv(result["logs"][0])) == 0
        assert result["final_return"] is None

    def test_no_seeds(self, small_settings, tmp_path):
        """An empty seed list is a configuration error."""
        with pytest.raises(ConfigError):
            run_training(small_settings, [], str(tmp_path / "out"))


class TestRunSweep:
    """Tests for hyperparameter sweeps."""

    def test_sweep_layout(self, small_settings, tmp_path):
        """One subdirectory per value and a stacked sweep.csv."""
        result = run_sweep(small_settings, "T", [1.0, 3.0], [0], str(tmp_path / "sweep"))
        assert [group["value"] for group in result["groups"]] == [1.0, 3.0]
        assert (tmp_path / "sweep" / "T_1.0" / "seed_0.csv").exists()
        assert (tmp_path / "sweep" / "T_3.0" / "summary.csv").exists()
        with open(result["sweep"], newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [row["T"] for row in rows] == ["1.0", "1.0", "3.0", "3.0"]

    def test_unknown_parameter(self, small_settings, tmp_path):
        """Only registered parameters can be swept."""
        assert "T" in SWEEP_PARAMETERS
        with pytest.raises(ConfigError):
            run_sweep(small_settings, "gamma", [0.9], [0], str(tmp_path))

    def test_empty_values(self, small_settings, tmp_path):
        """A sweep needs at least one value."""
        with pytest.raises(ConfigError):
            run_sweep(small_settings, "alpha", [], [0], str(tmp_path))


class TestRandomBaseline:
    """Tests for the uniform-action reference."""

    def test_deterministic(self, small_settings):
        """Same seed, same baseline."""
        first = random_baseline(small_settings, episodes=2, seed=3)
        second = random_baseline(small_settings, episodes=2, seed=3)
        assert first == second
        assert first["average_reward"] == pytest.approx(first["average_return"] / 10.0)
