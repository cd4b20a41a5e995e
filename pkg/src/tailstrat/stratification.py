"""Tail stratifications: nested shells over the tail of an input distribution.

A stratification splits the tail region ``A_*`` (everything outside a
high-probability null stratum ``A_0``) into ``m`` nested strata whose
probabilities follow the geometric law

    P(A_i) = p0^(i-1) * (1 - p0) * P(A_*),   i = 1..m

so each stratum carries a fixed fraction of the remaining tail mass. Two
analytic geometries are provided (radial shells for the standard normal,
p-norm shells for the uniform cube) plus empirical stratifications built
by sorting a sample pool on density.

With ``unbiased_tail=True`` the last stratum absorbs the entire remaining
tail instead of being truncated at a finite boundary: its probability
becomes ``p0^(m-1) * P(A_*)`` and the estimator built on it is exactly
unbiased.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .probmath import chi_cdf, chi_sf, chi_sf_inv
from .rng import RngStream

__all__ = [
    "BEYOND",
    "SafeRegion",
    "TailStratification",
    "VolumeSolveError",
    "null_stratum_empty",
    "null_stratum_from_design_point",
    "null_stratum_from_predicate",
    "build_gaussian_radial",
    "build_uniform_norm",
    "empirical_stratify",
    "is_allocation_stratify",
    "classify",
    "cube_ball_volume",
    "cube_ball_boundary",
    "norm_upper_limit",
    "to_json_dict",
    "from_json_dict",
]

# classify() label for points past the outermost truncated boundary.
BEYOND = -1

_TIE_TOL = 1e-12


class VolumeSolveError(RuntimeError):
    """A stratum-boundary volume equation could not be solved to tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# Null strata (safe regions)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SafeRegion:
    """The null stratum A_0: a region certified (or assumed) failure-free.

    ``probability`` is P(X in A_0) under the input distribution. For
    ``kind="predicate"`` the region is defined by a vectorized membership
    test that must never evaluate the performance function; certifying
    that the region really is safe is the caller's responsibility.
    """

    kind: str  # "empty" | "gaussian_ball" | "predicate"
    probability: float
    beta: float | None = None
    member: Callable[[np.ndarray], np.ndarray] | None = None
    probability_se: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if self.kind not in ("empty", "gaussian_ball", "predicate"):
            raise ValueError(f"unknown safe-region kind {self.kind!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("safe-region probability must lie in [0, 1]")

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Vectorized membership of rows of ``x`` in A_0."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "empty":
            return np.zeros(x.shape[0], dtype=bool)
        if self.kind == "gaussian_ball":
            return np.linalg.norm(x, axis=1) < self.beta
        return np.asarray(self.member(x), dtype=bool)


def null_stratum_empty() -> SafeRegion:
    """No null stratum: the whole space is tail."""
    return SafeRegion(kind="empty", probability=0.0)


def null_stratum_from_design_point(beta: float, d: int) -> SafeRegion:
    """Safe ball of radius ``beta`` around the origin (standard normal input).

    ``beta`` is typically the design-point reliability index; the ball it
    spans contains no failure only if the design point is global, which
    the caller asserts by using it here.
    """
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    return SafeRegion(
        kind="gaussian_ball", probability=float(chi_cdf(beta, d)), beta=float(beta)
    )


def null_stratum_from_predicate(
    member: Callable[[np.ndarray], np.ndarray],
    *,
    probability: float | None = None,
    sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
    n_probe: int = 100_000,
    rng: RngStream | None = None,
) -> SafeRegion:
    """Safe region from a membership predicate.

    Either pass ``probability`` directly (when P(A_0) is known in closed
    form) or pass ``sampler`` drawing from the input distribution, in
    which case P(A_0) is estimated by plain Monte Carlo on the predicate
    alone (no performance-function evaluations) and the standard error is
    recorded. An estimate of exactly 0 or 1 marks the region degenerate.
    """
    if (probability is None) == (sampler is None):
        raise ValueError("pass exactly one of probability= or sampler=")
    if probability is not None:
        return SafeRegion(kind="predicate", probability=float(probability), member=member)
    if rng is None:
        raise ValueError("sampler-based probability estimation needs rng=")
    gen = rng.generator()
    hits = 0
    remaining = int(n_probe)
    chunk = 20_000  # keeps the probe batch small even at d ~ 1000
    while remaining > 0:
        batch = sampler(gen, min(chunk, remaining))
        hits += int(np.count_nonzero(member(batch)))
        remaining -= len(batch)
    p_hat = hits / n_probe
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_probe)
    return SafeRegion(
        kind="predicate",
        probability=p_hat,
        member=member,
        probability_se=se,
        degenerate=(hits == 0 or hits == n_probe),
    )


# ---------------------------------------------------------------------------
# Volumes of p-norm balls intersected with the cube [-1, 1]^d
# ---------------------------------------------------------------------------

_QMC_N = 2**23
_QMC_SEED = 20260818
_qmc_norm_cache: dict[tuple[int, float], np.ndarray] = {}

# Above this dimension the Irwin-Hall alternating sum loses too many digits.
_IRWIN_HALL_MAX_D = 20


def _norm_key(norm_order: float) -> float:
    p = float(norm_order)
    if p in (1.0, 2.0) or math.isinf(p):
        return p
    raise ValueError("norm_order must be 1, 2, or inf")


def norm_upper_limit(d: int, norm_order: float) -> float:
    """Largest p-norm attained inside the cube [-1, 1]^d (at a corner)."""
    p = _norm_key(norm_order)
    if p == 1.0:
        return float(d)
    if p == 2.0:
        return math.sqrt(d)
    return 1.0


def _irwin_hall_cdf(lam: float, d: int) -> float:
    """P(U_1 + ... + U_d <= lam) for iid U[0, 1]; exact alternating sum."""
    if lam <= 0.0:
        return 0.0
    if lam >= d:
        return 1.0
    total = 0.0
    for j in range(int(math.floor(lam)) + 1):
        term = math.comb(d, j) * (lam - j) ** d
        total += -term if j % 2 else term
    return total / math.factorial(d)


def _qmc_sorted_norms(d: int, p: float) -> np.ndarray:
    """Sorted p-norms of a fixed scrambled-Sobol point set on the cube."""
    key = (d, p)
    if key not in _qmc_norm_cache:
        from scipy.stats import qmc

        sob = qmc.Sobol(d, scramble=True, seed=_QMC_SEED)
        chunks = []
        per = 2**20
        for _ in range(_QMC_N // per):
            pts = sob.random(per) * 2.0 - 1.0
            if math.isinf(p):
                chunks.append(np.max(np.abs(pts), axis=1))
            elif p == 1.0:
                chunks.append(np.sum(np.abs(pts), axis=1))
            else:
                chunks.append(np.linalg.norm(pts, axis=1))
        _qmc_norm_cache[key] = np.sort(np.concatenate(chunks))
    return _qmc_norm_cache[key]


def _volume_route(d: int, p: float) -> str:
    if math.isinf(p):
        return "closed"
    if p == 1.0:
        return "closed" if d <= _IRWIN_HALL_MAX_D else "qmc"
    return "qmc"


def cube_ball_volume(lam, d: int, norm_order: float):
    """Volume of {x in [-1,1]^d : ||x||_p <= lam}.

    Closed forms for the max norm ((2 lam)^d clipped to the cube) and the
    1-norm (Irwin-Hall CDF, d <= 20); otherwise the volume is read off a
    fixed scrambled-Sobol point set shared by all boundary computations,
    which keeps every volume query mutually consistent and monotone.
    """
    p = _norm_key(norm_order)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr < 0.0):
        raise ValueError("norm threshold must be nonnegative")
    route = _volume_route(d, p)
    if route == "closed":
        if math.isinf(p):
            vols = (2.0 * np.clip(lam_arr, 0.0, 1.0)) ** d
        else:
            vols = 2.0**d * np.array([_irwin_hall_cdf(v, d) for v in lam_arr])
    else:
        norms = _qmc_sorted_norms(d, p)
        counts = np.searchsorted(norms, lam_arr, side="right")
        vols = 2.0**d * counts / len(norms)
    if np.isscalar(lam) or np.asarray(lam).ndim == 0:
        return float(vols[0])
    return vols


def cube_ball_boundary(target_volume: float, d: int, norm_order: float,
                       volume_tolerance: float = 1e-4) -> float:
    """Solve cube_ball_volume(lam) = target_volume for lam."""
    p = _norm_key(norm_order)
    cube = 2.0**d
    if not 0.0 <= target_volume <= cube:
        raise ValueError("target volume outside [0, cube volume]")
    lam_max = norm_upper_limit(d, p)
    route = _volume_route(d, p)
    if route == "closed" and math.isinf(p):
        return 0.5 * target_volume ** (1.0 / d)
    if route == "closed":
        def f(lam: float) -> float:
            return 2.0**d * _irwin_hall_cdf(lam, d) - target_volume

        lam = optimize.brentq(f, 0.0, lam_max, xtol=1e-13, rtol=8.9e-16)
        residual = abs(f(lam)) / cube
        if residual > volume_tolerance:
            raise VolumeSolveError(
                f"1-norm boundary solve off target for d={d}", residual)
        return float(lam)
    norms = _qmc_sorted_norms(d, p)
    frac = target_volume / cube
    k = min(max(int(math.ceil(frac * len(norms))), 1), len(norms))
    lam = float(norms[k - 1])
    residual = abs(cube_ball_volume(lam, d, p) - target_volume) / cube
    if residual > volume_tolerance:
        raise VolumeSolveError(
            f"QMC boundary inversion off target for d={d}, p={p}", residual)
    return lam


# ---------------------------------------------------------------------------
# The stratification object
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EmpiricalPayload:
    """Sample pool, block membership and boundary record of an empirical
    stratification. Boundary thresholds are kept in log-density space
    (logaddexp midpoints are exact arithmetic means of the densities and
    immune to underflow in high dimension)."""

    samples: np.ndarray
    blocks: tuple[np.ndarray, ...]
    log_density: Callable[[np.ndarray], np.ndarray] | None
    tiebreak: Callable[[np.ndarray], np.ndarray] | None
    boundary_log_density: tuple[float, ...]  # m-1 inter-stratum thresholds
    boundary_is_tie: tuple[bool, ...]
    boundary_tiebreak: tuple[float, ...]
    outer_log_density: float  # stratum m's outer bound
    weights: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class TailStratification:
    """A concrete division of the tail A_* into m nested strata.

    ``boundaries`` has m+1 entries (the A_0 boundary plus one outer edge
    per stratum); the last entry is the domain's norm limit (or inf) when
    ``unbiased_tail`` is set, so no mass is left out. ``strata_probs``
    are absolute probabilities P(A_i) under the input distribution.
    """

    scheme: str  # "gaussian_radial" | "uniform_norm" | "empirical"
    d: int
    p0: float
    m: int
    prob_a_star: float
    boundaries: tuple[float, ...]
    strata_probs: tuple[float, ...]
    unbiased_tail: bool
    norm_order: float | None = None
    empirical: EmpiricalPayload | None = None
    flags: tuple[str, ...] = ()

    @property
    def remainder_prob(self) -> float:
        """Tail mass beyond the last stratum (zero for unbiased tails)."""
        return max(self.prob_a_star - sum(self.strata_probs), 0.0)

    @property
    def is_truncated(self) -> bool:
        return not self.unbiased_tail


def _validate_common(d: int, p0: float, m: int) -> None:
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ValueError("d must be a positive integer")
    if not 0.0 < p0 < 1.0:
        raise ValueError("p0 must lie strictly between 0 and 1")
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError("m must be a positive integer")


def _geometric_probs(p0: float, m: int, prob_a_star: float,
                     unbiased_tail: bool) -> tuple[float, ...]:
    probs = [(1.0 - p0) * p0 ** (i - 1) * prob_a_star for i in range(1, m + 1)]
    if unbiased_tail:
        probs[-1] = p0 ** (m - 1) * prob_a_star
    return tuple(probs)


def build_gaussian_radial(d: int, r0: float, p0: float, m: int,
                          *, unbiased_tail: bool = False) -> TailStratification:
    """Radial stratification of the standard normal tail {||x|| >= r0}.

    Boundary radii satisfy
        F_chi(r_i; d) = F_chi(r0; d) + (1 - p0^i) * (1 - F_chi(r0; d)),
    equivalently (and as computed, for full tail-side precision)
        P(||X|| > r_i) = p0^i * P(||X|| > r0),
    so each shell (r_{i-1}, r_i] carries exactly the geometric share of
    the tail mass.
    """
    _validate_common(d, p0, m)
    if r0 < 0.0:
        raise ValueError("r0 must be nonnegative")
    q0 = float(chi_sf(r0, d))
    prob_a_star = q0
    n_finite = m - 1 if unbiased_tail else m
    radii = [float(r0)]
    for i in range(1, n_finite + 1):
        radii.append(float(chi_sf_inv(q0 * p0**i, d)))
    if unbiased_tail:
        radii.append(math.inf)
    return TailStratification(
        scheme="gaussian_radial",
        d=int(d),
        p0=float(p0),
        m=int(m),
        prob_a_star=prob_a_star,
        boundaries=tuple(radii),
        strata_probs=_geometric_probs(p0, m, prob_a_star, unbiased_tail),
        unbiased_tail=unbiased_tail,
    )


def build_uniform_norm(d: int, norm_order: float, lam0: float, p0: float, m: int,
                       *, unbiased_tail: bool = False,
                       volume_tolerance: float = 1e-4) -> TailStratification:
    """p-norm stratification of the uniform cube [-1, 1]^d.

    The tail is {||x||_p > lam0}; boundary thresholds lam_i satisfy
        V(lam_i) = V(lam0) + (1 - p0^i) * (2^d - V(lam0))
    with V the ball-within-cube volume.
    """
    _validate_common(d, p0, m)
    p = _norm_key(norm_order)
    lam_max = norm_upper_limit(d, p)
    if not 0.0 <= lam0 < lam_max:
        raise ValueError(f"lam0 must lie in [0, {lam_max}) for this norm")
    cube = 2.0**d
    v0 = float(cube_ball_volume(lam0, d, p))
    prob_a_star = 1.0 - v0 / cube
    n_finite = m - 1 if unbiased_tail else m
    lams = [float(lam0)]
    for i in range(1, n_finite + 1):
        target = v0 + (1.0 - p0**i) * (cube - v0)
        lams.append(cube_ball_boundary(target, d, p, volume_tolerance))
    if unbiased_tail:
        lams.append(lam_max)
    if any(b - a <= 0.0 for a, b in zip(lams, lams[1:])):
        raise VolumeSolveError("boundary thresholds are not strictly increasing", 0.0)
    return TailStratification(
        scheme="uniform_norm",
        d=int(d),
        p0=float(p0),
        m=int(m),
        prob_a_star=prob_a_star,
        boundaries=tuple(lams),
        strata_probs=_geometric_probs(p0, m, prob_a_star, unbiased_tail),
        unbiased_tail=unbiased_tail,
        norm_order=p,
    )


# ---------------------------------------------------------------------------
# Empirical stratification (pool sorting)
# ---------------------------------------------------------------------------


def _ceil_tol(x: float) -> int:
    """ceil with a 1e-9 guard so 900.0000000000000222 rounds to 900."""
    return int(math.ceil(x - 1e-9))


def _sort_pool(log_f: np.ndarray, tiebreak: np.ndarray) -> np.ndarray:
    """Order: density descending, tiebreak ascending, original index last."""
    n = len(log_f)
    return np.lexsort((np.arange(n), tiebreak, -log_f))


def _boundary_record(log_f: np.ndarray, tiebreak: np.ndarray, order: np.ndarray,
                     block_sizes: Sequence[int]):
    """Midpoint thresholds between consecutive blocks (density space, with
    a tiebreak midpoint when the edge densities agree to 1e-12)."""
    log_mid, is_tie, tie_mid = [], [], []
    edge = 0
    for size in block_sizes[:-1]:
        edge += size
        last = order[edge - 1]
        first = order[edge]
        lf_last, lf_first = log_f[last], log_f[first]
        if abs(lf_last - lf_first) <= _TIE_TOL:
            log_mid.append(float(lf_last))
            is_tie.append(True)
            tie_mid.append(float(0.5 * (tiebreak[last] + tiebreak[first])))
        else:
            # log of the arithmetic mean of the two densities
            log_mid.append(float(np.logaddexp(lf_last, lf_first) - math.log(2.0)))
            is_tie.append(False)
            tie_mid.append(math.nan)
    outer = float(log_f[order[sum(block_sizes) - 1]]) - _TIE_TOL
    return tuple(log_mid), tuple(is_tie), tuple(tie_mid), outer


def _empirical_from_blocks(samples, log_f, tb, order, block_sizes, *,
                           log_density, tiebreak, p0, m, prob_a_star,
                           unbiased_tail, weights, flags) -> TailStratification:
    blocks = []
    edge = 0
    for size in block_sizes:
        blocks.append(order[edge:edge + size])
        edge += size
    log_mid, is_tie, tie_mid, outer = _boundary_record(log_f, tb, order, block_sizes)
    payload = EmpiricalPayload(
        samples=samples,
        blocks=tuple(blocks),
        log_density=log_density,
        tiebreak=tiebreak,
        boundary_log_density=log_mid,
        boundary_is_tie=is_tie,
        boundary_tiebreak=tie_mid,
        outer_log_density=outer,
        weights=weights,
    )
    return TailStratification(
        scheme="empirical",
        d=samples.shape[1],
        p0=float(p0),
        m=int(m),
        prob_a_star=float(prob_a_star),
        boundaries=(math.nan,) * (m + 1),
        strata_probs=_geometric_probs(p0, m, prob_a_star, unbiased_tail),
        unbiased_tail=unbiased_tail,
        empirical=payload,
        flags=tuple(flags),
    )


def empirical_stratify(samples: np.ndarray,
                       log_density: Callable[[np.ndarray], np.ndarray],
                       distance: Callable[[np.ndarray], np.ndarray],
                       p0: float, m: int, *, prob_a_star: float,
                       unbiased_tail: bool = False) -> TailStratification:
    """Stratify a pool drawn from f conditioned on the tail A_*.

    Samples are sorted by density descending (distance ascending on ties,
    original index on residual ties) and cut into blocks of size
    ceil(N (1-p0) p0^(i-1)). The block sizes realize a proportional
    allocation; stratum probabilities keep the exact geometric law.

    The pool can run dry inside the last stratum (the ceil sizes may sum
    to N+1); the partial final block is kept and flagged. An empty final
    block is an error, as is N (1-p0) p0^(m-1) < 1.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[0]
    _validate_common(samples.shape[1], p0, m)
    if n * (1.0 - p0) * p0 ** (m - 1) < 1.0 - 1e-9:
        raise ValueError(
            f"pool of {n} cannot fill {m} strata at p0={p0}: "
            f"final stratum target {n * (1.0 - p0) * p0 ** (m - 1):.3g} < 1"
        )
    log_f = np.asarray(log_density(samples), dtype=float)
    tb = np.asarray(distance(samples), dtype=float)
    order = _sort_pool(log_f, tb)

    flags: list[str] = []
    sizes = []
    used = 0
    for i in range(1, m + 1):
        size = _ceil_tol(n * (1.0 - p0) * p0 ** (i - 1))
        if used + size > n:
            size = n - used
            flags.append("partial_final_stratum")
        if size < 1:
            raise ValueError(f"pool exhausted before stratum {i}; use a larger pool")
        sizes.append(size)
        used += size
    return _empirical_from_blocks(
        samples, log_f, tb, order, sizes,
        log_density=log_density, tiebreak=distance,
        p0=p0, m=m, prob_a_star=prob_a_star,
        unbiased_tail=unbiased_tail, weights=None, flags=flags,
    )


def is_allocation_stratify(samples: np.ndarray,
                           log_f_density: Callable[[np.ndarray], np.ndarray],
                           log_q_density: Callable[[np.ndarray], np.ndarray],
                           prob_q_a_star: float,
                           spread: Callable[[np.ndarray], np.ndarray],
                           p0: float, m: int, *, prob_a_star: float,
                           unbiased_tail: bool = False) -> TailStratification:
    """Stratify a pool drawn from an importance density q conditioned on A_*.

    Like ``empirical_stratify`` but blocks are filled until the summed
    importance weights f/q reach N (1-p0) p0^(i-1), ties are broken by
    spread(x) * f/q ascending, and the per-sample weights are retained for
    weighted per-stratum estimation. With q = f this reduces exactly to
    ``empirical_stratify``.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[0]
    _validate_common(samples.shape[1], p0, m)
    if not 0.0 < prob_q_a_star <= 1.0:
        raise ValueError("prob_q_a_star must lie in (0, 1]")
    if not 0.0 < prob_a_star <= 1.0:
        raise ValueError("prob_a_star must lie in (0, 1]")
    # Both densities arrive in full-space form; conditioning each on A_*
    # (dividing by its tail mass) makes the weights average one over the
    # pool, so cumulative weight is on the same scale as a sample count.
    log_scale = math.log(prob_q_a_star) - math.log(prob_a_star)

    def weighted_spread(x: np.ndarray) -> np.ndarray:
        lf = np.asarray(log_f_density(x), dtype=float)
        lq = np.asarray(log_q_density(x), dtype=float)
        return np.asarray(spread(x), dtype=float) * np.exp(lf - lq + log_scale)

    log_f = np.asarray(log_f_density(samples), dtype=float)
    log_q = np.asarray(log_q_density(samples), dtype=float)
    with np.errstate(over="ignore"):
        w = np.exp(log_f - log_q + log_scale)
    if not np.all(np.isfinite(w)):
        raise ValueError("importance weights f/q overflow; q is too light-tailed")
    tb = np.asarray(spread(samples), dtype=float) * w
    order = _sort_pool(log_f, tb)

    flags: list[str] = []
    if np.max(w) > 0.5 * np.sum(w):
        flags.append("weight_degenerate")

    cum = np.cumsum(w[order])
    sizes = []
    edge = 0
    for i in range(1, m + 1):
        # fill the block until its summed weight reaches N (1-p0) p0^(i-1)
        target = n * (1.0 - p0) * p0 ** (i - 1)
        base = cum[edge - 1] if edge > 0 else 0.0
        k = int(np.searchsorted(cum, base + target - 1e-9, side="left")) + 1
        if k > n:
            k = n
            flags.append("partial_final_stratum")
        sizes.append(k - edge)
        edge = k
        if edge >= n and i < m:
            raise ValueError(f"pool exhausted before stratum {i + 1}")
    return _empirical_from_blocks(
        samples, log_f, tb, order, sizes,
        log_density=log_f_density, tiebreak=weighted_spread,
        p0=p0, m=m, prob_a_star=prob_a_star,
        unbiased_tail=unbiased_tail, weights=w, flags=flags,
    )


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def _classify_by_norm(strat: TailStratification, norms: np.ndarray,
                      in_domain: np.ndarray) -> np.ndarray:
    b = np.asarray(strat.boundaries)
    idx = np.searchsorted(b, norms, side="left").astype(np.int64)
    idx[norms == b[0]] = 1  # the A_* boundary itself belongs to stratum 1
    idx[norms < b[0]] = 0
    idx[norms > b[-1]] = BEYOND
    idx[~in_domain] = BEYOND
    return idx


def _classify_empirical(strat: TailStratification, x: np.ndarray) -> np.ndarray:
    pay = strat.empirical
    if pay.log_density is None:
        raise ValueError("this empirical stratification carries no density "
                         "evaluator; reattach one to classify new points")
    lf = np.asarray(pay.log_density(x), dtype=float)
    need_tb = any(pay.boundary_is_tie)
    tb = np.asarray(pay.tiebreak(x), dtype=float) if need_tb else None
    depth = np.ones(x.shape[0], dtype=np.int64)
    for log_mid, is_tie, tie_mid in zip(
            pay.boundary_log_density, pay.boundary_is_tie, pay.boundary_tiebreak):
        if is_tie:
            deeper = (lf < log_mid - _TIE_TOL) | (
                (np.abs(lf - log_mid) <= _TIE_TOL) & (tb > tie_mid))
        else:
            deeper = lf < log_mid
        depth += deeper.astype(np.int64)
    if strat.is_truncated:
        depth[lf < pay.outer_log_density] = BEYOND
    return depth


def classify(strat: TailStratification, x: np.ndarray):
    """Stratum index of each row of ``x``: 0 for A_0, 1..m for tail strata,
    BEYOND (-1) for points past a truncated stratification's last boundary
    (or outside the uniform scheme's cube).

    Empirical stratifications classify relative to their recorded
    density/tiebreak thresholds; membership in A_0 is not their business
    and must be checked against the safe region separately.
    """
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.shape[1] != strat.d:
        raise ValueError(f"expected points of dimension {strat.d}, got {arr.shape[1]}")
    if strat.scheme == "gaussian_radial":
        out = _classify_by_norm(strat, np.linalg.norm(arr, axis=1),
                                np.ones(arr.shape[0], dtype=bool))
    elif strat.scheme == "uniform_norm":
        p = strat.norm_order
        if math.isinf(p):
            norms = np.max(np.abs(arr), axis=1)
        elif p == 1.0:
            norms = np.sum(np.abs(arr), axis=1)
        else:
            norms = np.linalg.norm(arr, axis=1)
        in_cube = np.all(np.abs(arr) <= 1.0, axis=1)
        out = _classify_by_norm(strat, norms, in_cube)
    elif strat.scheme == "empirical":
        out = _classify_empirical(strat, arr)
    else:
        raise ValueError(f"unknown scheme {strat.scheme!r}")
    if np.asarray(x).ndim == 1:
        return int(out[0])
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def to_json_dict(strat: TailStratification) -> dict:
    """JSON-ready audit record: scheme, geometry and probabilities.

    Empirical stratifications serialize their boundary thresholds; the
    sample pool and evaluator callables are not part of the record.
    """
    doc = {
        "scheme": strat.scheme,
        "d": strat.d,
        "p0": strat.p0,
        "m": strat.m,
        "prob_a_star": strat.prob_a_star,
        "strata_probs": list(strat.strata_probs),
        "unbiased_tail": strat.unbiased_tail,
        "flags": list(strat.flags),
    }
    if strat.scheme == "empirical":
        pay = strat.empirical
        doc["boundaries"] = {
            "log_density_mid": list(pay.boundary_log_density),
            "is_tie": list(pay.boundary_is_tie),
            "tiebreak_mid": [None if math.isnan(v) else v
                             for v in pay.boundary_tiebreak],
            "outer_log_density": pay.outer_log_density,
        }
    else:
        doc["boundaries"] = ["inf" if math.isinf(b) else b for b in strat.boundaries]
        if strat.norm_order is not None:
            doc["norm_order"] = "inf" if math.isinf(strat.norm_order) else strat.norm_order
    return doc


def from_json_dict(doc: dict, *, log_density=None, tiebreak=None) -> TailStratification:
    """Rebuild a stratification from ``to_json_dict`` output.

    Analytic schemes round-trip exactly. Empirical schemes restore the
    boundary record (enough to classify new points) but not the sample
    pool; pass the original evaluators to re-enable classification.
    """
    scheme = doc["scheme"]
    if scheme == "empirical":
        b = doc["boundaries"]
        payload = EmpiricalPayload(
            samples=np.empty((0, doc["d"])),
            blocks=(),
            log_density=log_density,
            tiebreak=tiebreak,
            boundary_log_density=tuple(b["log_density_mid"]),
            boundary_is_tie=tuple(bool(v) for v in b["is_tie"]),
            boundary_tiebreak=tuple(math.nan if v is None else v
                                    for v in b["tiebreak_mid"]),
            outer_log_density=b["outer_log_density"],
            weights=None,
        )
        boundaries = (math.nan,) * (doc["m"] + 1)
        norm_order = None
    else:
        payload = None
        boundaries = tuple(math.inf if v == "inf" else float(v)
                           for v in doc["boundaries"])
        norm_order = doc.get("norm_order")
        if norm_order == "inf":
            norm_order = math.inf
    return TailStratification(
        scheme=scheme,
        d=int(doc["d"]),
        p0=float(doc["p0"]),
        m=int(doc["m"]),
        prob_a_star=float(doc["prob_a_star"]),
        boundaries=boundaries,
        strata_probs=tuple(doc["strata_probs"]),
        unbiased_tail=bool(doc["unbiased_tail"]),
        norm_order=norm_order,
        empirical=payload,
        flags=tuple(doc.get("flags", ())),
    )


def to_json(strat: TailStratification) -> str:
    return json.dumps(to_json_dict(strat), indent=2, sort_keys=True)


def from_json(text: str, **kw) -> TailStratification:
    return from_json_dict(json.loads(text), **kw)
