"""
Shared fixtures: a configuration small enough to train in well under a second.
"""

import pytest
import yaml

from dice_explorer.core.config_manager import ConfigManager


@pytest.fixture
def small_settings(tmp_path):
    """Merged settings for a 3-state tabular run of 20 steps."""
    settings = ConfigManager.get_defaults()
    settings["logging"]["file"] = str(tmp_path / "logs" / "test.log")
    settings["paths"]["output_dir"] = str(tmp_path / "runs")
    settings["training"].update(
        {
            "env": "tabular",
            "total_steps": 20,
            "warmup_steps": 10,
            "batch_size": 8,
            "buffer_capacity": 100,
            "hidden_sizes": [8],
            "eval_interval": 10,
            "eval_episodes": 1,
        }
    )
    settings["tabular"].update({"n_states": 3, "horizon": 10})
    return settings


@pytest.fixture
def small_config_file(tmp_path, small_settings):
    """small_settings written to a YAML file."""
    path = tmp_path / "small.yaml"
    path.write_text(yaml.dump(small_settings, sort_keys=False))
    return path


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: full-length acceptance runs (minutes); deselect with -m 'not slow'"
    )
