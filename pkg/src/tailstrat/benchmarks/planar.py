"""Two-dimensional benchmark performance functions (standard normal inputs).

All functions take an (n, 2) batch and return n values; failure is
g <= 0. These are analytic test problems with awkward failure-domain
geometry: oscillating boundaries, disjoint branches, a discontinuity,
and a multimodal surface.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "wavy_circle",
    "wavy_line",
    "alternating_domains",
    "four_branch",
    "metaball",
    "black_swan",
    "modified_rastrigin",
]

_SQRT2 = np.sqrt(2.0)


def _cols(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != 2:
        raise ValueError(f"expected (n, 2) input, got shape {x.shape}")
    return x[:, 0], x[:, 1]


def wavy_circle(x: np.ndarray) -> np.ndarray:
    """Failure outside a circle of radius 4 with a 7-lobed sine ripple.

    atan2(0, 0) evaluates to 0, so the origin is a regular point.
    """
    x1, x2 = _cols(x)
    return 4.0 + np.sin(7.0 * np.arctan2(x2, x1)) - np.hypot(x1, x2)


def wavy_line(x: np.ndarray) -> np.ndarray:
    """Failure above a tilted sine-wave boundary, far in the x2 tail."""
    x1, x2 = _cols(x)
    return 5.5 + np.sin(5.0 * x1) - 0.25 * x1 - x2


def alternating_domains(x: np.ndarray) -> np.ndarray:
    """cos(x1 exp(-x1 - 4)): alternating safe/failure bands deep in the
    negative-x1 tail (the first failure band starts near x1 = -3.27).

    The exponent is clipped at 300 so the unreachable far tail
    (|x1| > 296) stays finite instead of overflowing to cos(inf).
    """
    x1, _ = _cols(x)
    return np.cos(x1 * np.exp(np.minimum(-x1 - 4.0, 300.0)))


def four_branch(x: np.ndarray) -> np.ndarray:
    """Classic four-branch series system: two parabolic and two linear
    limit states, one failure region per quadrant direction."""
    x1, x2 = _cols(x)
    quad = 3.0 + 0.1 * (x1 - x2) ** 2
    lin = (x1 + x2) / _SQRT2
    b1 = quad - lin
    b2 = quad + lin
    b3 = (x1 - x2) + 7.0 / _SQRT2
    b4 = (x2 - x1) + 7.0 / _SQRT2
    return np.minimum(np.minimum(b1, b2), np.minimum(b3, b4))


def metaball(x: np.ndarray) -> np.ndarray:
    """Two smooth potential blobs; failure where their combined field
    drops below 5 (two disjoint curved failure regions)."""
    x1, x2 = _cols(x)
    a = (4.0 * (x1 + 2.0) ** 2 / 9.0 + x2**2 / 25.0) ** 2
    b = ((x1 - 2.5) ** 2 / 4.0 + (x2 - 0.5) ** 2 / 25.0) ** 2
    return 30.0 / (a + 1.0) + 20.0 / (b + 1.0) - 5.0


def black_swan(x: np.ndarray) -> np.ndarray:
    """Discontinuous limit state: g = 5 - x1 for x1 <= 2 but 5 - x2
    beyond, hiding a second failure region {x1 > 2, x2 >= 5} that
    level-crossing methods walk straight past."""
    x1, x2 = _cols(x)
    return np.where(x1 <= 2.0, 5.0 - x1, 5.0 - x2)


def modified_rastrigin(x: np.ndarray) -> np.ndarray:
    """Rastrigin-style multimodal surface with many small failure pockets."""
    x1, x2 = _cols(x)
    return 10.0 - (x1**2 - 5.0 * np.cos(2.0 * np.pi * x1)) \
                - (x2**2 - 5.0 * np.cos(2.0 * np.pi * x2))
