"""Reproducible experiment harness: seeded multi-trial runs, parameter
studies, and their CSV/JSON/figure outputs."""

from .config import ExperimentConfig
from .runner import CSV_COLUMNS, TrialReport, run
from .studies import (BiasStudy, ConvergenceStudy, bias_study,
                      convergence_study)

__all__ = [
    "ExperimentConfig",
    "TrialReport",
    "run",
    "CSV_COLUMNS",
    "BiasStudy",
    "ConvergenceStudy",
    "bias_study",
    "convergence_study",
]
