"""Experiment harness: deterministic sweeps, tables, plots, and the CLI."""

from .engine import (ExperimentConfig, RunRecord, fit_loglog, run_asym,
                     run_fuglede, run_profile, run_spectrum, run_sweep,
                     run_truncation, verdict_for)
from .svg import scatter_svg

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "fit_loglog",
    "run_asym",
    "run_fuglede",
    "run_profile",
    "run_spectrum",
    "run_sweep",
    "run_truncation",
    "scatter_svg",
    "verdict_for",
]
