"""
Logging configuration for the band-density toolkit.

This module provides centralized logging configuration that can be used across
the library modules, the command-line front end and the tests.
"""
import logging
import sys
from pathlib import Path
from typing import Any, Optional


def setup_logger(
    name: str = None,
    level: int = logging.INFO,
    log_file: Optional[str] = None,
    console_output: bool = True,
    fmt: str = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
) -> logging.Logger:
    """
    Configure and return a logger with standardized formatting.

    Console output goes to stderr so that JSON/CSV written to stdout stays clean.

    Args:
        name: Logger name. If None, returns root logger
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional log file path. If provided, logs to file
        console_output: Whether to output logs to console (default: True)
        fmt: Record format

    Returns:
        Configured logger instance

    Example:
        >>> logger = setup_logger('banddensity', level=logging.DEBUG)
        >>> logger.info("Sweep started")
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Remove existing handlers to avoid duplicates
    logger.handlers = []

    formatter = logging.Formatter(fmt=fmt, datefmt='%Y-%m-%d %H:%M:%S')

    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_file, mode='a', encoding='utf-8')
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # Prevent propagation to avoid duplicate logs
    logger.propagate = False

    return logger


def log_step(logger: logging.Logger, step: str):
    """
    Log a processing step with visual separation for better readability.

    Args:
        logger: Logger instance
        step: Description of the step

    Example:
        >>> log_step(logger, "Construct penta witness")
    """
    logger.info(f"{'='*60}")
    logger.info(f"STEP: {step}")
    logger.info(f"{'='*60}")


def log_check(logger: logging.Logger, name: str, worst: Any, tolerance: Any, status: str):
    """
    Log a verification check result with clear formatting.

    Args:
        logger: Logger instance
        name: Check name
        worst: Worst residual observed
        tolerance: Allowed residual
        status: 'pass', 'fail' or 'skipped'

    Example:
        >>> log_check(logger, "annihilation", 0, 0, "pass")
    """
    level = logging.ERROR if status == "fail" else logging.INFO

    logger.log(level, f"CHECK [{status.upper()}]: {name}")
    logger.log(level, f"  Tolerance: {tolerance}")
    logger.log(level, f"  Worst: {worst}")
