"""Experiment toolkit: configuration, persistence, sweeps, and the CLI."""

from .config import load_config, resolve_config
from .sweep import KernelChangeSeries, run_drift_cell, run_sweep

__all__ = [
    "load_config",
    "resolve_config",
    "KernelChangeSeries",
    "run_drift_cell",
    "run_sweep",
]
