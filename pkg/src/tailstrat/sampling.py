"""Samplers for tail strata: radial shells, p-norm shells, pooled draws.

Gaussian shells are sampled by inverse transform on the norm (uniform
direction times a radius drawn from the conditional chi law, computed in
survival space so deep shells keep full precision). Uniform p-norm shells
are sampled by rejection, switching to a ball-shell proposal when the
cube acceptance rate gets small.

``allocated_samples`` hard-asserts that every sample classifies into the
stratum it was drawn for; radii are nudged one ulp off an open boundary
when inverse-transform rounding lands exactly on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .probmath import chi_sf, chi_sf_inv, latin_hypercube
from .rng import RngStream
from .stratification import TailStratification, classify, cube_ball_volume, norm_upper_limit

__all__ = [
    "SamplingError",
    "PoolResult",
    "sample_gaussian_shell",
    "sample_gaussian_ball",
    "sample_uniform_shell",
    "proportional_pool",
    "allocated_samples",
]

_SCHEMES = ("mcs", "lhs")


class SamplingError(RuntimeError):
    """Sampling could not produce the requested draws."""


def _check_scheme(scheme: str) -> None:
    if scheme not in _SCHEMES:
        raise ValueError(f"scheme must be one of {_SCHEMES}, got {scheme!r}")


def _radial_points(d: int, radii: np.ndarray, gen: np.random.Generator,
                   angles: np.ndarray | None = None) -> np.ndarray:
    """Points at the given norms: uniform random directions, or explicit
    angles in d=2 (used by the LHS scheme to stratify the direction too)."""
    n = len(radii)
    if angles is not None:
        return radii[:, None] * np.column_stack((np.cos(angles), np.sin(angles)))
    z = gen.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1)
    # a zero vector has probability zero; keep the guard cheap
    norms[norms == 0.0] = 1.0
    return z * (radii / norms)[:, None]


def _shell_radii(d: int, r_lo: float, r_hi: float, u: np.ndarray,
                 *, inclusive_low: bool) -> np.ndarray:
    """Map uniforms to radii of the chi law conditioned on (r_lo, r_hi]."""
    q_lo = float(chi_sf(r_lo, d))
    q_hi = 0.0 if math.isinf(r_hi) else float(chi_sf(r_hi, d))
    if q_lo <= q_hi:
        raise ValueError(f"empty shell: r_lo={r_lo}, r_hi={r_hi}")
    q = q_lo * (1.0 - u) + q_hi * u
    radii = chi_sf_inv(q, d)
    low = r_lo if inclusive_low else np.nextafter(r_lo, np.inf)
    return np.clip(radii, low, r_hi if not math.isinf(r_hi) else None)


def sample_gaussian_shell(d: int, r_lo: float, r_hi: float, n: int, rng: RngStream,
                          scheme: str = "mcs", *,
                          inclusive_low: bool = True) -> np.ndarray:
    """n draws from the d-variate standard normal conditioned on the shell
    r_lo <= ||x|| <= r_hi (r_hi may be inf).

    scheme="lhs" stratifies the radial uniform with a Latin hypercube
    column; in d=2 a second column stratifies the angle as well.
    """
    _check_scheme(scheme)
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 <= r_lo < r_hi:
        raise ValueError("need 0 <= r_lo < r_hi")
    gen = rng.generator()
    angles = None
    if scheme == "lhs":
        cols = latin_hypercube(n, 2 if d == 2 else 1, rng.substream(7))
        u = cols[:, 0]
        if d == 2:
            angles = 2.0 * math.pi * cols[:, 1]
    else:
        u = gen.random(n)
    radii = _shell_radii(d, r_lo, r_hi, u, inclusive_low=inclusive_low)
    return _radial_points(d, radii, gen, angles)


def sample_gaussian_ball(d: int, r_hi: float, n: int, rng: RngStream) -> np.ndarray:
    """n draws from the standard normal conditioned on ||x|| < r_hi."""
    if n < 1:
        raise ValueError("n must be positive")
    if r_hi <= 0.0:
        raise ValueError("r_hi must be positive")
    gen = rng.generator()
    q_hi = float(chi_sf(r_hi, d))
    u = gen.random(n)
    # survival value uniform on (q_hi, 1]: complement of the shell map
    q = 1.0 + (q_hi - 1.0) * u
    radii = chi_sf_inv(q, d)
    radii = np.minimum(radii, np.nextafter(r_hi, 0.0))
    return _radial_points(d, radii, gen, None)


# ---------------------------------------------------------------------------
# Uniform cube shells
# ---------------------------------------------------------------------------


def _lp_ball_volume_unclipped(lam: float, d: int, p: float) -> float:
    """Volume of the full p-norm ball (no cube clipping)."""
    if math.isinf(p):
        return (2.0 * lam) ** d
    if p == 1.0:
        return (2.0 * lam) ** d / math.factorial(d)
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * lam**d


def _lp_direction(d: int, p: float, n: int, gen: np.random.Generator) -> np.ndarray:
    """Cone-measure uniform directions on the unit p-norm sphere."""
    if math.isinf(p):
        y = gen.uniform(-1.0, 1.0, size=(n, d))
        norms = np.max(np.abs(y), axis=1)
    elif p == 1.0:
        y = gen.laplace(size=(n, d))
        norms = np.sum(np.abs(y), axis=1)
    else:
        y = gen.standard_normal((n, d))
        norms = np.linalg.norm(y, axis=1)
    norms[norms == 0.0] = 1.0
    return y / norms[:, None]


def _lp_norm(x: np.ndarray, p: float) -> np.ndarray:
    if math.isinf(p):
        return np.max(np.abs(x), axis=1)
    if p == 1.0:
        return np.sum(np.abs(x), axis=1)
    return np.linalg.norm(x, axis=1)


def sample_uniform_shell(d: int, norm_order: float, lam_lo: float, lam_hi: float,
                         n: int, rng: RngStream, *,
                         inclusive_low: bool = True,
                         stats: dict | None = None) -> np.ndarray:
    """n uniform draws from {x in [-1,1]^d : lam_lo <= ||x||_p <= lam_hi}.

    Thick shells are filled by rejection from the cube. When the shell
    holds less than 1e-3 of the cube, proposals come instead from the
    exact ball-shell distribution (cone-measure direction times a
    volume-uniform radius) and only the cube clipping is rejected on. If
    even that acceptance falls below 1e-6 the shell is too thin a sliver
    of the ball to sample this way and an error asks for an analytic
    decomposition. Total proposals are capped at 1e4 * n.

    Pass a dict as ``stats`` to receive route, acceptance and proposal
    counts.
    """
    p = float(norm_order)
    if n < 1:
        raise ValueError("n must be positive")
    lam_max = norm_upper_limit(d, p)
    if not 0.0 <= lam_lo < lam_hi <= lam_max + 1e-12:
        raise ValueError(f"need 0 <= lam_lo < lam_hi <= {lam_max}")
    cube = 2.0**d
    shell_vol = float(cube_ball_volume(lam_hi, d, p)) - float(cube_ball_volume(lam_lo, d, p))
    p_cube = shell_vol / cube
    if p_cube <= 0.0:
        raise SamplingError("shell has no volume inside the cube")

    gen = rng.generator()
    route = "cube" if p_cube >= 1e-3 else "ball_shell"
    if route == "ball_shell":
        ball_shell = (_lp_ball_volume_unclipped(lam_hi, d, p)
                      - _lp_ball_volume_unclipped(lam_lo, d, p))
        p_accept = shell_vol / ball_shell
        if p_accept < 1e-6:
            raise SamplingError(
                f"shell acceptance {p_accept:.2e} below 1e-6; decompose the "
                "shell analytically instead of sampling by rejection")
    else:
        p_accept = p_cube

    low = lam_lo if inclusive_low else np.nextafter(lam_lo, np.inf)
    cap = int(1e4) * n
    kept: list[np.ndarray] = []
    got = 0
    proposed = 0
    while got < n:
        want = n - got
        batch = int(min(max(2.0 * want / p_accept, 1024), 4_000_000))
        if proposed + batch > cap:
            batch = cap - proposed
            if batch <= 0:
                raise SamplingError(
                    f"proposal cap {cap} reached with {got}/{n} accepted "
                    f"(acceptance ~{got / max(proposed, 1):.2e})")
        if route == "cube":
            x = gen.uniform(-1.0, 1.0, size=(batch, d))
        else:
            u = gen.random(batch)
            radii = (lam_lo**d + u * (lam_hi**d - lam_lo**d)) ** (1.0 / d)
            x = _lp_direction(d, p, batch, gen) * radii[:, None]
        proposed += batch
        norms = _lp_norm(x, p)
        ok = (norms >= low) & (norms <= lam_hi)
        if route == "ball_shell":
            ok &= np.all(np.abs(x) <= 1.0, axis=1)
        x = x[ok]
        if len(x) > want:
            x = x[:want]
        kept.append(x)
        got += len(x)
    if stats is not None:
        stats.update(route=route, n_proposals=proposed,
                     acceptance=got / proposed, expected_acceptance=p_accept)
    return np.concatenate(kept, axis=0)


# ---------------------------------------------------------------------------
# Pooled and allocated draws over a stratification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PoolResult:
    """A pool from the tail f|A_* with its per-stratum classification."""

    samples: np.ndarray
    labels: np.ndarray
    by_stratum: dict[int, np.ndarray]  # stratum index -> row indices

    @property
    def n_beyond(self) -> int:
        return len(self.by_stratum.get(-1, ()))


def proportional_pool(strat: TailStratification, n: int, rng: RngStream,
                      sampler=None) -> PoolResult:
    """Draw n iid samples from the input law conditioned on A_* and group
    them by stratum (multinomial counts; deepest-tail points beyond a
    truncated stratification land in the -1 group).

    Analytic schemes know their own conditional sampler; empirical
    stratifications require an explicit ``sampler(gen, n)``.
    """
    if strat.scheme == "gaussian_radial":
        samples = sample_gaussian_shell(strat.d, strat.boundaries[0], math.inf,
                                        n, rng.substream(2))
    elif strat.scheme == "uniform_norm":
        samples = sample_uniform_shell(strat.d, strat.norm_order,
                                       strat.boundaries[0],
                                       norm_upper_limit(strat.d, strat.norm_order),
                                       n, rng.substream(2))
    else:
        if sampler is None:
            raise ValueError("empirical stratifications need an explicit sampler")
        samples = sampler(rng.substream(2).generator(), n)
    labels = classify(strat, samples)
    by_stratum = {int(k): np.flatnonzero(labels == k) for k in np.unique(labels)}
    return PoolResult(samples=samples, labels=labels, by_stratum=by_stratum)


def allocated_samples(strat: TailStratification, counts, rng: RngStream,
                      scheme: str = "mcs") -> dict[int, np.ndarray]:
    """Draw counts[i-1] samples from each stratum A_i (deterministic
    stratified allocation). Every returned sample is verified to classify
    into its stratum; a violation is a bug, not a statistics problem, and
    raises immediately.

    Stratum i always draws from the substream (0, i) of ``rng``, so two
    estimators sharing a stream see identical stratum samples.
    """
    _check_scheme(scheme)
    if strat.scheme == "empirical":
        raise ValueError("empirical stratifications are sampled as a pool, "
                         "not by per-stratum allocation")
    counts = np.asarray(counts, dtype=int)
    if len(counts) != strat.m:
        raise ValueError(f"need {strat.m} counts, got {len(counts)}")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    out: dict[int, np.ndarray] = {}
    for i, c in enumerate(counts, start=1):
        if c == 0:
            continue
        sub = rng.substream(0, i)
        lo, hi = strat.boundaries[i - 1], strat.boundaries[i]
        if strat.scheme == "gaussian_radial":
            x = sample_gaussian_shell(strat.d, lo, hi, int(c), sub, scheme,
                                      inclusive_low=(i == 1))
        else:
            if scheme == "lhs":
                raise ValueError("lhs sampling is defined for the gaussian "
                                 "radial scheme only")
            x = sample_uniform_shell(strat.d, strat.norm_order, lo, hi, int(c),
                                     sub, inclusive_low=(i == 1))
        labels = classify(strat, x)
        if not np.all(labels == i):
            bad = int(np.count_nonzero(labels != i))
            raise AssertionError(
                f"{bad} sample(s) drawn for stratum {i} classified elsewhere; "
                "stratification and sampler disagree")
        out[i] = x
    return out
