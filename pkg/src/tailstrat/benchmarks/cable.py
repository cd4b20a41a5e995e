"""Stranded wire cable under an uncertain axial load.

The cable fails when the applied load exceeds the summed yield capacity
of its strands:

    g(x) = sigma_y * sum_j (pi/4) phi_j^2 - P
    phi_j = (1 + 0.1 x_j) * 1 mm,    P = (1 + 0.05 Phi(x_0)) * P_0.

Input layout is x = (x_0, x_1, ..., x_Nw): the load factor first, then
one diameter error per strand. Units: N, m.

The stochastic variant treats the strand count as unknown: each
evaluation draws N_w uniformly from {n_min..n_max} using an explicit
latent generator, sums only the first N_w strand areas, and is therefore
a noisy black box in x (dimension n_max + 1). Estimators that replay the
same latent stream get bit-identical results.

Because the maximum possible load is (1 + 0.05) P_0, any x whose total
certified area exceeds A_min = 1.05 P_0 / sigma_y is safe without
evaluating g; ``area_predicate`` packages that test (over all strands,
or only the guaranteed n_min strands for the stochastic cable).
"""

from __future__ import annotations

import numpy as np

from ..probmath import std_normal_cdf

__all__ = [
    "make_cable_g",
    "make_cable_stochastic_g",
    "area_predicate",
    "cable_load",
    "strand_areas",
    "SIGMA_Y",
    "PHI_0",
]

SIGMA_Y = 250.0e6  # Pa
PHI_0 = 1.0e-3  # m


def strand_areas(x_strands: np.ndarray) -> np.ndarray:
    """Cross-section areas (m^2) from strand error variables, elementwise."""
    phi = (1.0 + 0.1 * x_strands) * PHI_0
    return 0.25 * np.pi * phi**2


def cable_load(x0: np.ndarray, p_nominal: float) -> np.ndarray:
    """Applied load (N) from the load factor variable."""
    return (1.0 + 0.05 * std_normal_cdf(x0)) * p_nominal


def make_cable_g(n_strands: int = 1000, p_nominal: float = 193_500.0):
    """Deterministic cable performance function; input dim n_strands + 1."""
    d = n_strands + 1

    def g(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != d:
            raise ValueError(f"expected (n, {d}) input")
        capacity = SIGMA_Y * np.sum(strand_areas(x[:, 1:]), axis=1)
        return capacity - cable_load(x[:, 0], p_nominal)

    return g


def make_cable_stochastic_g(n_min: int = 990, n_max: int = 1000,
                            p_nominal: float = 192_250.0):
    """Stochastic cable: g(x, gen) with the strand count drawn from gen.

    Areas are cumulatively summed once per batch, so drawing N_w per row
    costs one integer draw and a gather.
    """
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    d = n_max + 1

    def g(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != d:
            raise ValueError(f"expected (n, {d}) input")
        n_w = gen.integers(n_min, n_max + 1, size=x.shape[0])
        cum = np.cumsum(strand_areas(x[:, 1:]), axis=1)
        capacity = SIGMA_Y * cum[np.arange(x.shape[0]), n_w - 1]
        return capacity - cable_load(x[:, 0], p_nominal)

    return g


def area_predicate(n_certified: int, p_nominal: float, d: int):
    """Membership test for the maximum-load null stratum.

    True where the summed area of the first ``n_certified`` strands
    strictly exceeds A_min = 1.05 p_nominal / sigma_y; such points cannot
    fail under any realizable load (or strand count >= n_certified), and
    the test never touches the performance function.
    """
    a_min = 1.05 * p_nominal / SIGMA_Y

    def member(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != d:
            raise ValueError(f"expected (n, {d}) input")
        total = np.sum(strand_areas(x[:, 1:n_certified + 1]), axis=1)
        return total > a_min

    return member
