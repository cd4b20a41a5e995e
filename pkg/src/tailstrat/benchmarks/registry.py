"""Named benchmark registry: every performance function in the corpus,
addressable by name, with its dimension and reference failure probability.

All benchmarks take standard normal inputs. The failure convention is
g(x) <= 0; use :meth:`Benchmark.indicator` to get the boolean form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..estimator import FailureEstimate, mcs_estimate
from ..rng import RngStream
from . import cable, cantilever, planar, sdof
from .buckling import buckling_g

__all__ = ["Benchmark", "benchmark_names", "get_benchmark", "reference_oracle"]


@dataclass(frozen=True)
class Benchmark:
    """A performance function plus the metadata needed to test against it.

    ``g`` maps an (n, d) batch to n margins; failure is g <= 0. When
    ``stochastic`` is set, ``g`` takes a second argument, the latent
    ``numpy.random.Generator`` that resolves the randomness inside the
    performance function itself (never the sampling randomness).

    ``safe_predicate``, when present, certifies a safe region from
    problem knowledge alone: it maps an (n, d) batch to booleans that
    are True only for points that provably cannot fail.
    """

    name: str
    d: int
    g: Callable[..., np.ndarray]
    reference_pf: float | None
    pf_provenance: str
    reference_beta: float | None = None
    stochastic: bool = False
    safe_predicate: Callable[[np.ndarray], np.ndarray] | None = None
    params: Mapping[str, object] = field(default_factory=dict)

    def indicator(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.stochastic:
            raise ValueError(
                f"benchmark {self.name!r} is stochastic; bind a latent "
                "generator explicitly instead of using indicator()")
        g = self.g
        return lambda x: np.asarray(g(x)) <= 0.0

    def stochastic_indicator(self, latent: np.random.Generator
                             ) -> Callable[[np.ndarray], np.ndarray]:
        if not self.stochastic:
            raise ValueError(f"benchmark {self.name!r} is deterministic")
        g = self.g
        return lambda x: np.asarray(g(x, latent)) <= 0.0


def _planar(name: str, g, pf: float, beta: float,
            provenance: str = "tabulated") -> Benchmark:
    return Benchmark(name=name, d=2, g=g, reference_pf=pf,
                     pf_provenance=provenance, reference_beta=beta)


def _make_cantilever(d: int = 1000) -> Benchmark:
    pf = 1.782e-3 if d == 1000 else None
    return Benchmark(name="cantilever", d=d, g=cantilever.make_cantilever_g(d),
                     reference_pf=pf, pf_provenance="simulation",
                     params={"d": d})


def _make_sdof(barrier: float = 0.26, d: int = 1000,
               damping_convention: str = "as_printed") -> Benchmark:
    known = {0.20: 5.569e-2, 0.26: 5.283e-3, 0.32: 2.727e-4}
    pf = known.get(barrier) if d == 1000 else None
    g = sdof.make_sdof_g(barrier=barrier, d=d,
                         damping_convention=damping_convention)
    return Benchmark(name="sdof", d=d, g=g, reference_pf=pf,
                     pf_provenance="simulation",
                     params={"barrier": barrier, "d": d,
                             "damping_convention": damping_convention})


def _make_cable(n_strands: int = 1000,
                p_nominal: float = 193_500.0) -> Benchmark:
    pf = 1.709e-4 if (n_strands, p_nominal) == (1000, 193_500.0) else None
    return Benchmark(
        name="cable", d=n_strands + 1,
        g=cable.make_cable_g(n_strands=n_strands, p_nominal=p_nominal),
        reference_pf=pf, pf_provenance="simulation",
        safe_predicate=cable.area_predicate(n_strands, p_nominal,
                                            n_strands + 1),
        params={"n_strands": n_strands, "p_nominal": p_nominal})


def _make_cable_stochastic(n_min: int = 990, n_max: int = 1000,
                           p_nominal: float = 192_250.0) -> Benchmark:
    default = (n_min, n_max, p_nominal) == (990, 1000, 192_250.0)
    return Benchmark(
        name="cable_stochastic", d=n_max + 1,
        g=cable.make_cable_stochastic_g(n_min=n_min, n_max=n_max,
                                        p_nominal=p_nominal),
        reference_pf=2.587e-4 if default else None,
        pf_provenance="simulation", stochastic=True,
        safe_predicate=cable.area_predicate(n_min, p_nominal, n_max + 1),
        params={"n_min": n_min, "n_max": n_max, "p_nominal": p_nominal})


_FACTORIES: dict[str, Callable[..., Benchmark]] = {
    "wavy_circle": lambda: _planar("wavy_circle", planar.wavy_circle,
                                   2.582e-3, 3.0),
    "wavy_line": lambda: _planar("wavy_line", planar.wavy_line,
                                 1.217e-6, 4.36),
    "alternating_domains": lambda: _planar("alternating_domains",
                                           planar.alternating_domains,
                                           5.266e-4, 3.26),
    "four_branch": lambda: _planar("four_branch", planar.four_branch,
                                   2.222e-3, 3.0),
    "metaball": lambda: _planar("metaball", planar.metaball, 1.129e-5, 4.26),
    "black_swan": lambda: _planar("black_swan", planar.black_swan,
                                  6.521e-9, 5.38, provenance="analytic"),
    "rastrigin": lambda: _planar("rastrigin", planar.modified_rastrigin,
                                 7.299e-2, 0.64),
    "buckling": lambda: Benchmark(name="buckling", d=7, g=buckling_g,
                                  reference_pf=2.424e-5,
                                  pf_provenance="simulation"),
    "cantilever": _make_cantilever,
    "sdof": _make_sdof,
    "cable": _make_cable,
    "cable_stochastic": _make_cable_stochastic,
}


def benchmark_names() -> tuple[str, ...]:
    return tuple(sorted(_FACTORIES))


def get_benchmark(name: str, **params) -> Benchmark:
    """Build a benchmark by name; keyword params reach its factory."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        known = ", ".join(benchmark_names())
        raise KeyError(f"unknown benchmark {name!r}; known: {known}") from None
    return factory(**params)


def standard_normal_sampler(d: int) -> Callable[[np.random.Generator, int],
                                                np.ndarray]:
    return lambda gen, k: gen.standard_normal((k, d))


def reference_oracle(bench: Benchmark, n: int, rng: RngStream,
                     *, batch: int = 1_000_000) -> FailureEstimate:
    """Brute-force Monte Carlo reference for a benchmark.

    For stochastic benchmarks the latent generator is derived from the
    same stream (substream 9), so the estimate is reproducible.
    """
    if bench.stochastic:
        indicator = bench.stochastic_indicator(rng.substream(9).generator())
    else:
        indicator = bench.indicator()
    return mcs_estimate(indicator, standard_normal_sampler(bench.d), n, rng,
                        batch=batch)
