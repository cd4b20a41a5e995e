"""Rare-event failure probability estimation by tail stratification.

The package is organised in layers:

- :mod:`tailstrat.probmath`: numerically careful chi / standard-normal
  tail functions in survival form.
- :mod:`tailstrat.stratification`: geometric radial strata and the
  empirical (density-ranked) variant, plus safe-region handling.
- :mod:`tailstrat.sampling`: per-stratum samplers (inverse-transform
  radial, Latin hypercube, rejection pools) and budget allocation.
- :mod:`tailstrat.estimator`: the stratified estimator, its variance,
  and the truncation bias bound.
- :mod:`tailstrat.designpoint`: most-probable-failure-point search.
- :mod:`tailstrat.sus`: subset simulation baseline.
- :mod:`tailstrat.benchmarks`: the benchmark registry.
- :mod:`tailstrat.harness`: experiment configs, trial runner, studies.
"""

from .benchmarks import Benchmark, benchmark_names, get_benchmark
from .designpoint import DesignPointResult, find_design_point, \
    multi_start_design_point
from .estimator import AllocationStrategy, FailureEstimate, allocate, \
    mcs_estimate, predicted_variance, tss_estimate, tss_full_with_a0
from .harness import BiasStudy, ConvergenceStudy, ExperimentConfig, \
    TrialReport, bias_study, convergence_study, run
from .rng import RngStream
from .sampling import allocated_samples, proportional_pool, \
    sample_gaussian_ball, sample_gaussian_shell
from .stratification import SafeRegion, TailStratification, \
    build_gaussian_radial, build_uniform_norm, classify, empirical_stratify, \
    null_stratum_empty, null_stratum_from_design_point, \
    null_stratum_from_predicate
from .sus import subset_simulation

__version__ = "0.1.0"

__all__ = [
    "AllocationStrategy",
    "Benchmark",
    "BiasStudy",
    "ConvergenceStudy",
    "DesignPointResult",
    "ExperimentConfig",
    "FailureEstimate",
    "RngStream",
    "SafeRegion",
    "TailStratification",
    "TrialReport",
    "allocate",
    "allocated_samples",
    "benchmark_names",
    "bias_study",
    "build_gaussian_radial",
    "build_uniform_norm",
    "classify",
    "convergence_study",
    "empirical_stratify",
    "find_design_point",
    "get_benchmark",
    "mcs_estimate",
    "multi_start_design_point",
    "null_stratum_empty",
    "null_stratum_from_design_point",
    "null_stratum_from_predicate",
    "predicted_variance",
    "proportional_pool",
    "run",
    "sample_gaussian_ball",
    "sample_gaussian_shell",
    "subset_simulation",
    "tss_estimate",
    "tss_full_with_a0",
    "__version__",
]
