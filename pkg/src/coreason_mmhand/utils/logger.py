# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Logging configuration for Coreason MMHand."""

import sys
from pathlib import Path
from typing import Any, Optional

from loguru import logger as _logger

from coreason_mmhand.config import settings

__all__ = ["LOG_FILE", "command_logger", "logger", "setup_logger"]

LOG_FILE = "mmhand.log"

# Re-export logger
logger = _logger


def setup_logger(log_dir: Optional[str] = None) -> Path:
    """Configures the application logger.

    Installs a human-readable stderr sink and a serialized JSON file sink (rotated at 500 MB, kept
    10 days). Structured extras passed as keyword arguments land in the JSON record's `extra` field.

    Args:
        log_dir (Optional[str]): Directory of the JSON sink; defaults to `settings.LOG_DIR`.

    Returns:
        Path: The JSON log file.
    """
    logger.remove()

    logger.add(
        sys.stderr,
        level=settings.LOG_LEVEL,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
        "<level>{level: <8}</level> | "
        "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
    )

    log_path = Path(log_dir or settings.LOG_DIR)
    if not log_path.exists():
        log_path.mkdir(parents=True, exist_ok=True)

    log_file = log_path / LOG_FILE
    logger.add(
        str(log_file),
        rotation="500 MB",
        retention="10 days",
        serialize=True,
        enqueue=True,
        level=settings.LOG_LEVEL,
    )
    return log_file


def command_logger(command: str, **extra: Any) -> Any:
    """Logger bound to one CLI command, so every record of a run carries its name."""
    return logger.bind(command=command, **extra)


# Initialize logger on import
setup_logger()
