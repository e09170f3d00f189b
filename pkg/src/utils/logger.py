"""Logging configuration using Loguru.

Console output by default, optional file logging; plus helpers for the
events every pipeline stage reports (rates, training progress, timings).
"""

import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import TYPE_CHECKING

from loguru import logger

from src.config.settings import settings

if TYPE_CHECKING:
    from src.encoder.bitstream import RateReport


def setup_logger(
    log_level: str | None = None,
    log_file: str | None = None,
):
    """Route logs to stderr, and optionally to a file.

    Stdout stays free for the JSON summaries the CLI prints. A ``log_file``
    ending in ``.jsonl`` receives one serialized JSON record per line.

    Args:
        log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL (default: settings.log_level).
        log_file: Optional log path (default: settings.log_file).

    Returns:
        The configured loguru logger.
    """
    log_level = (log_level or settings.log_level).upper()
    log_file = log_file or settings.log_file

    logger.remove()

    # ========================================================================
    # Console Handler
    # ========================================================================
    logger.add(
        sys.stderr,
        format=(
            "<green>{time:HH:mm:ss}</green> | "
            "<level>{level: <8}</level> | "
            "<cyan>{name}</cyan>:<cyan>{line}</cyan> | "
            "<level>{message}</level>"
        ),
        level=log_level,
        colorize=True,
        backtrace=False,
        diagnose=False,
    )

    # ========================================================================
    # File Handler
    # ========================================================================
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        structured = log_path.suffix == ".jsonl"
        logger.add(
            log_path,
            format="{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} | {message}",
            serialize=structured,
            level=log_level,
            diagnose=False,
            enqueue=True,
        )
        logger.debug(f"Logging {log_level} to stderr and {log_path}{' (JSON lines)' if structured else ''}")

    return logger


# Initialize logger on import
setup_logger()


# ============================================================================
# Convenience functions for common logging patterns
# ============================================================================

def log_rate_report(image_id: str, report: "RateReport") -> None:
    """Log the per-component rate of one encoded image.

    Args:
        image_id: Identifier of the encoded image.
        report: Rate report computed from its bitstream.
    """
    logger.info(
        f"{image_id}: {float(report.bpp_total):.4f} bpp "
        f"(ssm {float(report.bpp_ssm):.4f}, coarse {float(report.bpp_coarse):.4f}, "
        f"header {float(report.bpp_header):.4f})"
    )


def log_training_progress(step: int, loss: float, smoothed: float) -> None:
    """Log one training progress line.

    Args:
        step: Optimizer step just completed.
        loss: Raw loss of that step.
        smoothed: Exponentially smoothed loss.
    """
    logger.info(f"step {step}: loss {loss:.5f} (smoothed {smoothed:.5f})")


# ============================================================================
# Context managers for logging
# ============================================================================

@contextmanager
def log_execution_context(operation: str):
    """Context manager to log operation execution time.

    Args:
        operation: Name of the operation being performed.

    Example:
        >>> with log_execution_context("encode"):
        ...     # Your code here
        ...     pass
    """
    start_time = time.perf_counter()
    logger.info(f"Starting {operation}")

    try:
        yield
        duration = time.perf_counter() - start_time
        logger.info(f"Completed {operation} in {duration:.2f}s")
    except Exception as e:
        duration = time.perf_counter() - start_time
        logger.error(f"Failed {operation} after {duration:.2f}s: {str(e)}")
        raise
