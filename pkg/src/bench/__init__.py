"""Experiment harness: rate-distortion sweeps and the command-line interface."""

from src.bench.sweep import RDSweep, rd_sweep

__all__ = ["RDSweep", "rd_sweep"]
