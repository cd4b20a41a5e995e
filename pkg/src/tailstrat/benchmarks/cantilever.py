"""Cantilever beam tip deflection under a noisy distributed load.

A 10 m steel cantilever (rectangular 160 x 240 mm section) carries d
point loads at u_j = j L / d, each the integrated share of a nominal
uniform load with a lognormal-style error:

    W_j = w0 + (w0 / 2) (exp(X_j) - 1),   w0 = 20 / d kN.

Superposing the textbook point-load deflection formula gives the tip
deflection; failure is the tip moving more than 100 mm. Units: kN, m.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_cantilever_g", "CANTILEVER_LENGTH", "CANTILEVER_EI"]

CANTILEVER_LENGTH = 10.0  # m
_E = 2.0e8  # kN/m^2 (200 GPa)
_I = 0.16 * 0.24**3 / 12.0  # m^4
CANTILEVER_EI = _E * _I  # 36864 kN m^2
_LIMIT = 0.10  # m


def make_cantilever_g(d: int = 1000):
    """Vectorized performance function for a d-point load discretization."""
    if d < 1:
        raise ValueError("d must be positive")
    length = CANTILEVER_LENGTH
    u = np.arange(1, d + 1) * (length / d)
    # tip deflection per unit point load at u_j (load between support and tip)
    coeff = u**2 * (3.0 * length - u) / (6.0 * CANTILEVER_EI)
    w0 = 20.0 / d
    base = w0 * float(np.sum(coeff))

    def g(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != d:
            raise ValueError(f"expected (n, {d}) input")
        tip = base + 0.5 * w0 * (np.expm1(x) @ coeff)
        return _LIMIT - tip

    return g
