"""
Configuration management module.
Handles loading, saving, and accessing configuration values.

The file is YAML with one section per concern (training, dice, tabular, ...).
The hierarchy is defaults -> config file -> command-line options. Values are
checked later by TrainingConfig.from_dict. The training and dice defaults
are read off the TrainingConfig and DiceConfig field defaults.
"""

import copy
import logging
from dataclasses import MISSING, fields
from pathlib import Path
from typing import Any, Dict, Iterable

import yaml

from dice_explorer.core.dice import DiceConfig
from dice_explorer.core.errors import ConfigError
from dice_explorer.core.trainer import TrainingConfig

logger = logging.getLogger(__name__)


def _section(owner, skip: Iterable[str] = (), from_profile: Iterable[str] = ()) -> Dict[str, Any]:
    """A settings section from a config dataclass's field defaults; from_profile keys are null."""
    section: Dict[str, Any] = {}
    for item in fields(owner):
        if item.name in skip:
            continue
        if item.name in from_profile:
            section[item.name] = None
        elif item.default_factory is not MISSING:
            section[item.name] = item.default_factory()
        else:
            section[item.name] = item.default
    return section


DEFAULTS: Dict[str, Any] = {
    "app": {"name": "DICE Explorer", "version": "1.0.0"},
    "logging": {
        "level": "INFO",
        "file": "logs/dice_explorer.log",
        "console_enabled": False,
    },
    "paths": {"output_dir": "runs"},
    "profile": "desk",
    "training": _section(
        TrainingConfig, skip=("dice", "tabular"), from_profile=("buffer_capacity", "hidden_sizes")
    ),
    # tau follows training.tau, hidden_sizes follows training.hidden_sizes
    "dice": _section(DiceConfig, skip=("tau",), from_profile=("hidden_sizes",)),
    "tabular": {
        "n_states": 5,
        "n_actions": 2,
        "reward_scale": 1.0,
        "reward_offset": 0.0,
        "horizon": 100,
        "path": None,
        "seed": 0,
    },
}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Sections merge key by key; anything else in override replaces base."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(merged.get(key), dict) and isinstance(value, dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    """Load, save and address sectioned settings with dot-notation keys."""

    @staticmethod
    def load(path: str) -> Dict[str, Any]:
        """
        Read a YAML settings file.

        An empty file is an empty configuration.

        Args:
            path: Path to config file

        Returns:
            The file's sections as a dictionary

        Raises:
            FileNotFoundError: If the file doesn't exist
            ConfigError: If the YAML is malformed or not a mapping
        """
        config_path = Path(path)
        if not config_path.exists():
            logger.error(f"Config file not found: {path}")
            raise FileNotFoundError(f"Config file not found: {path}")

        try:
            with open(config_path, "r", encoding="utf-8") as handle:
                config = yaml.safe_load(handle)
        except yaml.YAMLError as e:
            logger.exception(f"Invalid YAML in config file: {path}")
            raise ConfigError(f"Invalid YAML in config file: {path}") from e

        if config is None:
            config = {}
        if not isinstance(config, dict):
            raise ConfigError(f"{path}: expected sections (a mapping), got {type(config).__name__}")

        logger.info(f"Config loaded from: {path} (sections: {', '.join(config) or 'none'})")
        return config

    @staticmethod
    def save(config: Dict[str, Any], path: str) -> None:
        """
        Write settings as YAML, keeping section order. Parent directories are created.

        Args:
            config: Configuration dictionary
            path: Destination file
        """
        config_path = Path(path)
        config_path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with open(config_path, "w", encoding="utf-8") as handle:
                yaml.dump(config, handle, default_flow_style=False, sort_keys=False)
        except OSError:
            logger.exception(f"Failed to save config: {path}")
            raise
        logger.info(f"Config saved to: {path}")

    @staticmethod
    def get(config: Dict[str, Any], key: str, default: Any = None) -> Any:
        """
        Look up a dot-notation key.

        Example:
            >>> ConfigManager.get({"dice": {"temperature": 3.0}}, "dice.temperature")
            3.0
            >>> ConfigManager.get({"dice": {}}, "dice.temperature", 5.0)
            5.0
        """
        value: Any = config
        for part in key.split("."):
            if not isinstance(value, dict) or part not in value:
                return default
            value = value[part]
        return value

    @staticmethod
    def set(config: Dict[str, Any], key: str, value: Any) -> None:
        """
        Assign a dot-notation key in place, creating missing sections.

        Raises:
            ConfigError: If a key on the way is a value rather than a section

        Example:
            >>> config = {}
            >>> ConfigManager.set(config, "training.mode", "sac")
            >>> config
            {'training': {'mode': 'sac'}}
        """
        *sections, name = key.split(".")
        current = config
        for part in sections:
            current = current.setdefault(part, {})
            if not isinstance(current, dict):
                raise ConfigError(
                    f"Cannot set {key}: '{part}' holds a {type(current).__name__}, not a section"
                )
        current[name] = value
        logger.debug(f"Config updated: {key} = {value!r}")

    @staticmethod
    def get_defaults() -> Dict[str, Any]:
        """A fresh copy of the built-in settings."""
        return copy.deepcopy(DEFAULTS)

    @staticmethod
    def merge_with_defaults(config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Layer loaded settings over the defaults; unknown sections are kept.

        Args:
            config: Loaded configuration

        Returns:
            Merged configuration (neither input is modified)
        """
        return _deep_merge(ConfigManager.get_defaults(), copy.deepcopy(config))
