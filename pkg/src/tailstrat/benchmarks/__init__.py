"""Reliability benchmark corpus: analytic 2-D fields plus structural
problems (buckling frame, cantilever, oscillator, wire cable)."""

from .buckling import buckling_g, buckling_params, stable_equilibria
from .cable import (area_predicate, cable_load, make_cable_g,
                    make_cable_stochastic_g, strand_areas)
from .cantilever import CANTILEVER_EI, CANTILEVER_LENGTH, make_cantilever_g
from .planar import (alternating_domains, black_swan, four_branch, metaball,
                     modified_rastrigin, wavy_circle, wavy_line)
from .registry import (Benchmark, benchmark_names, get_benchmark,
                       reference_oracle, standard_normal_sampler)
from .sdof import make_sdof_g

__all__ = [
    "Benchmark",
    "benchmark_names",
    "get_benchmark",
    "reference_oracle",
    "standard_normal_sampler",
    "buckling_g",
    "buckling_params",
    "stable_equilibria",
    "make_cable_g",
    "make_cable_stochastic_g",
    "area_predicate",
    "strand_areas",
    "cable_load",
    "make_cantilever_g",
    "CANTILEVER_LENGTH",
    "CANTILEVER_EI",
    "make_sdof_g",
    "alternating_domains",
    "black_swan",
    "four_branch",
    "metaball",
    "modified_rastrigin",
    "wavy_circle",
    "wavy_line",
]
