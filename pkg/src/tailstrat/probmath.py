"""Probability primitives: normal/chi/beta distribution maps and LHS designs.

These are thin, domain-checked wrappers around scipy.special's Cephes
routines. Everything is vectorized: scalars in, scalar out; arrays in,
arrays out. ``d`` always means the dimension of a standard normal vector,
and ``chi_cdf(r, d)`` is the probability that its Euclidean norm is at
most ``r``.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .rng import RngStream

__all__ = [
    "std_normal_cdf",
    "std_normal_cdf_inv",
    "std_normal_pdf",
    "log_std_normal_pdf",
    "log_std_normal_pdf_vector",
    "chi_cdf",
    "chi_cdf_inv",
    "chi_sf",
    "chi_sf_inv",
    "beta_cdf_inv",
    "latin_hypercube",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


def _as_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if np.any(np.isnan(a)):
        raise ValueError("argument contains NaN")
    return a


def _match(result: np.ndarray, like) -> float | np.ndarray:
    """Return a scalar when the input was scalar-like."""
    if np.isscalar(like) or (isinstance(like, np.ndarray) and like.ndim == 0):
        return float(result)
    return result


def std_normal_cdf(x):
    """Phi(x), accurate in both tails (|x| up to 8 and far beyond)."""
    a = _as_array(x)
    return _match(special.ndtr(a), x)


def std_normal_cdf_inv(p):
    """Phi^{-1}(p) for p in the open interval (0, 1)."""
    a = _as_array(p)
    if np.any(a <= 0.0) or np.any(a >= 1.0):
        raise ValueError("std_normal_cdf_inv requires 0 < p < 1")
    return _match(special.ndtri(a), p)


def std_normal_pdf(x):
    """Density of the standard normal (elementwise)."""
    a = _as_array(x)
    return _match(np.exp(-0.5 * a * a - 0.5 * _LOG_2PI), x)


def log_std_normal_pdf_vector(x: np.ndarray) -> np.ndarray:
    """Log joint density of rows of ``x`` under the d-variate standard normal."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return -0.5 * np.einsum("ij,ij->i", x, x) - 0.5 * x.shape[1] * _LOG_2PI


def log_std_normal_pdf(x):
    """Elementwise log density of the standard normal."""
    a = _as_array(x)
    return _match(-0.5 * a * a - 0.5 * _LOG_2PI, x)


def _check_dim(d: int) -> float:
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ValueError(f"dimension must be an integer >= 1, got {d!r}")
    return float(d)


def chi_cdf(r, d: int):
    """P(||X||_2 <= r) for X a d-variate standard normal, r >= 0.

    Equals the regularized lower incomplete gamma function P(d/2, r^2/2).
    """
    dd = _check_dim(d)
    a = _as_array(r)
    if np.any(a < 0.0):
        raise ValueError("chi_cdf requires r >= 0")
    return _match(special.gammainc(dd / 2.0, 0.5 * a * a), r)


def chi_cdf_inv(p, d: int):
    """Inverse of ``chi_cdf`` in r, for p in [0, 1)."""
    dd = _check_dim(d)
    a = _as_array(p)
    if np.any(a < 0.0) or np.any(a >= 1.0):
        raise ValueError("chi_cdf_inv requires 0 <= p < 1")
    return _match(np.sqrt(2.0 * special.gammaincinv(dd / 2.0, a)), p)


def chi_sf(r, d: int):
    """P(||X||_2 > r): the survival complement of ``chi_cdf``.

    Computed directly from the upper incomplete gamma function, so tiny
    tail probabilities keep full relative precision instead of being
    squeezed against 1.
    """
    dd = _check_dim(d)
    a = _as_array(r)
    if np.any(a < 0.0):
        raise ValueError("chi_sf requires r >= 0")
    return _match(special.gammaincc(dd / 2.0, 0.5 * a * a), r)


def chi_sf_inv(q, d: int):
    """Radius whose tail mass is q, for q in (0, 1]."""
    dd = _check_dim(d)
    a = _as_array(q)
    if np.any(a <= 0.0) or np.any(a > 1.0):
        raise ValueError("chi_sf_inv requires 0 < q <= 1")
    return _match(np.sqrt(2.0 * special.gammainccinv(dd / 2.0, a)), q)


def beta_cdf_inv(p, alpha: float, beta: float):
    """Inverse CDF of the Beta(alpha, beta) distribution, p in [0, 1]."""
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("beta shape parameters must be positive")
    a = _as_array(p)
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise ValueError("beta_cdf_inv requires 0 <= p <= 1")
    return _match(special.betaincinv(alpha, beta, a), p)


def latin_hypercube(n: int, k: int, rng: RngStream) -> np.ndarray:
    """Latin hypercube design of n points in [0, 1)^k.

    Each column is a random permutation of the n equal bins with one
    uniform draw inside each bin, so every axis-aligned slab of width
    1/n contains exactly one point.
    """
    if n < 1 or k < 1:
        raise ValueError("latin_hypercube requires n >= 1 and k >= 1")
    gen = rng.generator()
    jitter = gen.random((n, k))
    points = np.empty((n, k), dtype=float)
    for j in range(k):
        points[:, j] = (gen.permutation(n) + jitter[:, j]) / n
    return points
