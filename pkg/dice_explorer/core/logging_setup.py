"""
Logging configuration for training runs and the shell.
"""

import logging
import sys
from pathlib import Path

from dice_explorer.core.errors import ConfigError

# Third-party loggers that flood DEBUG output (font scans, SVG backend)
NOISY_LOGGERS = ("matplotlib", "PIL")

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def setup_logging(
    log_file: str, log_level: str = "INFO", console_enabled: bool = False
) -> None:
    """
    Configure the root logger.

    Training diagnostics (per-evaluation rows, DICE losses at DEBUG) go to
    the log file; the per-evaluation CSV is written separately by the
    trainer.

    Args:
        log_file: Path to log file (relative to the working directory)
        log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL
        console_enabled: Also log WARNING and above to stderr (CLI mode only)

    Raises:
        ConfigError: If log_level is not a known level name
    """
    level_name = str(log_level).upper()
    if level_name not in LEVELS:
        raise ConfigError(f"Unknown log level: {log_level}. Available: {', '.join(LEVELS)}")
    level = getattr(logging, level_name)

    log_path = Path(log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger()
    logger.setLevel(level)
    logger.handlers.clear()

    file_handler = logging.FileHandler(log_path, encoding="utf-8")
    file_handler.setLevel(level)
    file_handler.setFormatter(
        logging.Formatter(
            "%(asctime)s [%(levelname)s] %(name)s:%(lineno)d - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    )
    logger.addHandler(file_handler)

    # Not in the REPL: it would interleave with the prompt
    if console_enabled:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.WARNING)
        console_handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
        logger.addHandler(console_handler)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(max(level, logging.WARNING))

    logger.info(f"Logging initialized: {log_file} (level={level_name})")
