"""
Utility modules shared by the encoder, decoder and benchmark code.
"""

from src.utils.logger import (
    log_execution_context,
    log_rate_report,
    log_training_progress,
    setup_logger,
)

__all__ = [
    "log_execution_context",
    "log_rate_report",
    "log_training_progress",
    "setup_logger",
]
