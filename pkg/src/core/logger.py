"""
Confmap Logger Module

This module sets up structured logging for the entire toolkit using Loguru.
It provides consistent logging format, rotation, and severity levels.
"""

import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger


def setup_logger(level: str = "INFO", log_dir: Optional[Union[str, Path]] = "logs"):
    """Configure the toolkit logger with console and file handlers.

    Args:
        level: Minimum level for the console handler
        log_dir: Directory for rotating log files, or None for console only

    Returns:
        The configured loguru logger
    """
    # Remove default handlers
    logger.remove()

    # Console handler; stderr keeps stdout free for command summaries
    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
        level=level.upper(),
        colorize=True,
    )

    if log_dir is not None:
        logs_dir = Path(log_dir)
        logs_dir.mkdir(parents=True, exist_ok=True)

        # All logs
        logger.add(
            logs_dir / "confmap.log",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            level="DEBUG",
            rotation="10 MB",
            retention="1 week",
            compression="zip",
        )

        # Errors only
        logger.add(
            logs_dir / "confmap-errors.log",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            level="ERROR",
            rotation="10 MB",
            retention="1 month",
            compression="zip",
        )

    logger.debug("Logger initialized")
    return logger


def dev_log(message: str, status: str = "INFO") -> None:
    """Log pipeline stage progress with special formatting.

    Args:
        message: The stage message
        status: Status indicator (INFO, DONE, NOTE, WARN, ERROR)
    """
    status_colors = {
        "INFO": "blue",
        "DONE": "green",
        "NOTE": "magenta",
        "WARN": "yellow",
        "ERROR": "red",
    }
    color = status_colors.get(status, "white")
    # Frame ids and paths may contain markup-like text
    safe_message = message.replace("<", r"\<")

    logger.opt(colors=True, depth=1).info(
        f"<{color}>[DEV-{status}]</{color}> {safe_message}"
    )


# Export logger and stage logging function
__all__ = ["logger", "dev_log", "setup_logger"]
