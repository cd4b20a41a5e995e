"""Failure-probability estimators over tail stratifications.

The stratified estimator combines per-stratum failure fractions with the
known stratum probabilities:

    p_hat = sum_i P(A_i) * pf_i,     pf_i = (failures in stratum i) / N_i

Its variance estimate is the maximum-likelihood plug-in

    var_hat = sum_i P(A_i)^2 * pf_i (1 - pf_i) / N_i

(dividing by N_i, not N_i - 1). A truncated stratification leaves the
tail mass beyond stratum m unexplored, so |E[p_hat] - P_F| is bounded by
that omitted mass, p0^m * P(A_*); stratifications built with
``unbiased_tail=True`` have no omitted mass and a zero bias bound.

Indicator convention: every estimator takes ``indicator(X) -> bool array``
with True meaning failure, and counts one performance-function evaluation
per row it passes in, so ``n_g_evals`` always equals the sum of the
per-stratum sample counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .rng import RngStream
from .sampling import allocated_samples, sample_gaussian_ball
from .stratification import SafeRegion, TailStratification

__all__ = [
    "AllocationStrategy",
    "FailureEstimate",
    "largest_remainder",
    "allocate",
    "predicted_variance",
    "tss_estimate",
    "tss_full_with_a0",
    "mcs_estimate",
    "importance_estimate",
]

_Indicator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AllocationStrategy:
    """How a sample budget is split across strata.

    kinds: "proportional" (by stratum probability), "equal",
    "neyman" (by weight * sqrt(pf (1 - pf)) from guessed failure
    fractions; without guesses the estimator runs a 10% proportional
    pilot first), and "general" (explicit fractions, summing to 1).
    """

    kind: str
    pf_guesses: tuple[float, ...] | None = None
    gammas: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("proportional", "equal", "neyman", "general"):
            raise ValueError(f"unknown allocation kind {self.kind!r}")
        if self.kind == "general":
            if self.gammas is None:
                raise ValueError("general allocation needs gammas")
            g = np.asarray(self.gammas, dtype=float)
            if np.any(g < 0.0) or abs(g.sum() - 1.0) > 1e-9:
                raise ValueError("gammas must be nonnegative and sum to 1")
        if self.pf_guesses is not None:
            pf = np.asarray(self.pf_guesses, dtype=float)
            if np.any(pf < 0.0) or np.any(pf > 1.0):
                raise ValueError("pf guesses must lie in [0, 1]")

    @staticmethod
    def proportional() -> "AllocationStrategy":
        return AllocationStrategy("proportional")

    @staticmethod
    def equal() -> "AllocationStrategy":
        return AllocationStrategy("equal")

    @staticmethod
    def neyman(pf_guesses=None) -> "AllocationStrategy":
        return AllocationStrategy(
            "neyman",
            pf_guesses=None if pf_guesses is None else tuple(float(v) for v in pf_guesses),
        )

    @staticmethod
    def general(gammas) -> "AllocationStrategy":
        return AllocationStrategy("general", gammas=tuple(float(v) for v in gammas))


def largest_remainder(weights, n: int) -> np.ndarray:
    """Integer counts proportional to ``weights`` summing exactly to n.

    Floors first, then hands the leftover seats to the largest fractional
    remainders (ties to the lower stratum index, deterministically).
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if total <= 0.0:
        raise ValueError("weights sum to zero; nothing to allocate")
    frac = n * w / total
    counts = np.floor(frac).astype(int)
    seats = n - counts.sum()
    if seats > 0:
        remainders = frac - counts
        order = np.lexsort((np.arange(len(w)), -remainders))
        counts[order[:seats]] += 1
    return counts


def _gamma_fractions(alloc: AllocationStrategy, strat: TailStratification,
                     pf_for_neyman=None) -> np.ndarray:
    """Allocation fractions gamma_i (summing to 1) for each kind."""
    w = np.asarray(strat.strata_probs, dtype=float)
    if alloc.kind == "proportional":
        return w / w.sum()
    if alloc.kind == "equal":
        return np.full(strat.m, 1.0 / strat.m)
    if alloc.kind == "general":
        g = np.asarray(alloc.gammas, dtype=float)
        if len(g) != strat.m:
            raise ValueError(f"need {strat.m} gammas, got {len(g)}")
        return g
    # neyman
    pf = alloc.pf_guesses if alloc.pf_guesses is not None else pf_for_neyman
    if pf is None:
        raise ValueError("neyman allocation needs pf guesses (or let "
                         "tss_estimate run its pilot)")
    pf = np.asarray(pf, dtype=float)
    if len(pf) != strat.m:
        raise ValueError(f"need {strat.m} pf guesses, got {len(pf)}")
    sig = np.sqrt(pf * (1.0 - pf))
    score = w * sig
    if score.sum() <= 0.0:
        raise ValueError("all pf guesses are 0 or 1: no variance signal to "
                         "allocate on; use explicit nonzero guesses")
    return score / score.sum()


def allocate(alloc: AllocationStrategy, strat: TailStratification, n: int) -> np.ndarray:
    """Split a budget of n evaluations across the m strata.

    Largest-remainder rounding of the allocation fractions, with a
    floor: any stratum carrying a positive fraction that rounds to
    zero takes one seat from the currently largest stratum, so a small
    budget cannot silently starve the deep tail. Strata explicitly
    weighted zero (a zero Neyman guess or a zero gamma) stay at zero.
    """
    gamma = _gamma_fractions(alloc, strat)
    alive = gamma > 0.0
    n_alive = int(np.count_nonzero(alive))
    if n < n_alive:
        raise ValueError(f"budget {n} cannot cover {n_alive} strata")
    counts = largest_remainder(gamma, n)
    while np.any((counts == 0) & alive):
        counts[np.argmax(counts)] -= 1
        counts[np.flatnonzero((counts == 0) & alive)[0]] += 1
    return counts


def predicted_variance(alloc: AllocationStrategy, strat: TailStratification,
                       pf_vector, n: int) -> float:
    """Closed-form variance of the stratified estimator at failure
    fractions ``pf_vector`` under the given allocation of n samples:
    sum_i w_i^2 pf_i (1 - pf_i) / (gamma_i n). Returns inf when a stratum
    with variance gets no samples; 0 when no stratum has any variance.
    """
    w = np.asarray(strat.strata_probs, dtype=float)
    pf = np.asarray(pf_vector, dtype=float)
    if len(pf) != strat.m:
        raise ValueError(f"need {strat.m} pf values, got {len(pf)}")
    var_i = pf * (1.0 - pf)
    if not np.any(var_i > 0.0):
        return 0.0
    if alloc.kind == "neyman" and alloc.pf_guesses is None:
        gamma = _gamma_fractions(alloc, strat, pf_for_neyman=pf)
    else:
        gamma = _gamma_fractions(alloc, strat)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(var_i > 0.0, w**2 * var_i / (gamma * n), 0.0)
    return float(np.sum(terms)) if np.all(np.isfinite(terms)) else math.inf


# ---------------------------------------------------------------------------
# Estimate container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FailureEstimate:
    """A failure-probability estimate with its uncertainty bookkeeping.

    ``cov`` is None when p_hat = 0 (the coefficient of variation is
    undefined at zero). ``per_stratum`` holds (N_i, pf_i) pairs in
    stratum order; for plain Monte Carlo it has a single entry, and the
    A_0-augmented estimator prepends the null stratum as entry 0.
    """

    p_hat: float
    var_hat: float
    cov: float | None
    bias_bound: float
    per_stratum: tuple[tuple[int, float], ...]
    n_g_evals: int
    estimator_kind: str
    flags: tuple[str, ...] = ()
    extra: Mapping[str, float] = field(default_factory=dict)

    def to_record(self) -> dict:
        """Flat record for delimited output."""
        return {
            "p_hat": self.p_hat,
            "var_hat": self.var_hat,
            "cov": self.cov,
            "bias_bound": self.bias_bound,
            "n_g_evals": self.n_g_evals,
            "estimator_kind": self.estimator_kind,
            "flags": ";".join(self.flags),
        }


def _finish(p_hat: float, var_hat: float, bias_bound: float, per_stratum,
            n_evals: int, kind: str, flags=(), extra=None) -> FailureEstimate:
    cov = math.sqrt(var_hat) / p_hat if p_hat > 0.0 else None
    return FailureEstimate(
        p_hat=float(p_hat),
        var_hat=float(var_hat),
        cov=cov,
        bias_bound=float(bias_bound),
        per_stratum=tuple((int(n), float(pf)) for n, pf in per_stratum),
        n_g_evals=int(n_evals),
        estimator_kind=kind,
        flags=tuple(flags),
        extra=dict(extra or {}),
    )


def _check_decomposition(strat: TailStratification, safe: SafeRegion) -> None:
    slack = max(1e-6, 4.0 * safe.probability_se)
    if abs(safe.probability + strat.prob_a_star - 1.0) > slack:
        raise ValueError(
            f"safe region (P={safe.probability:.6g}) and tail "
            f"(P={strat.prob_a_star:.6g}) do not partition the space")


def _bias_bound(strat: TailStratification) -> float:
    return strat.remainder_prob if strat.is_truncated else 0.0


def _combine(weights, counts, fails):
    counts = np.asarray(counts, dtype=float)
    fails = np.asarray(fails, dtype=float)
    pf = np.divide(fails, counts, out=np.zeros_like(fails), where=counts > 0)
    p_hat = float(np.sum(weights * pf))
    with np.errstate(invalid="ignore"):
        var_terms = np.divide(weights**2 * pf * (1.0 - pf), counts,
                              out=np.zeros(len(counts)), where=counts > 0)
    return p_hat, float(np.sum(var_terms)), pf


# ---------------------------------------------------------------------------
# The stratified estimators
# ---------------------------------------------------------------------------


def tss_estimate(strat: TailStratification, safe: SafeRegion,
                 indicator: _Indicator, alloc: AllocationStrategy,
                 n: int, rng: RngStream, scheme: str = "mcs") -> FailureEstimate:
    """Stratified failure-probability estimate with budget n.

    Analytic stratifications draw fresh per-stratum samples under the
    requested allocation; an empirical stratification already carries its
    pool and block allocation, in which case ``alloc`` must be
    proportional and n (if not None) must match the pooled count.

    A Neyman allocation without guesses spends 10% of the budget on a
    proportional pilot, allocates the rest on the pilot's variance
    signal, and pools pilot and main samples per stratum.
    """
    _check_decomposition(strat, safe)
    if strat.scheme == "empirical":
        if alloc.kind != "proportional":
            raise ValueError("an empirical stratification fixes its own "
                             "(proportional) allocation")
        pooled = sum(len(b) for b in strat.empirical.blocks)
        if n is not None and n != pooled:
            raise ValueError(f"empirical pool holds {pooled} samples, not {n}")
        return _tss_from_blocks(strat, indicator)

    weights = np.asarray(strat.strata_probs, dtype=float)
    flags: list[str] = []
    pilot_counts = np.zeros(strat.m, dtype=int)
    pilot_fails = np.zeros(strat.m, dtype=int)

    if alloc.kind == "neyman" and alloc.pf_guesses is None:
        n_pilot = max(strat.m, int(round(0.1 * n)))
        if n_pilot >= n:
            raise ValueError(f"budget {n} too small for a Neyman pilot")
        pilot_counts = _min_one(largest_remainder(weights, n_pilot))
        pilot_samples = allocated_samples(strat, pilot_counts,
                                          rng.substream(1), scheme)
        for i, x in pilot_samples.items():
            pilot_fails[i - 1] = int(np.count_nonzero(indicator(x)))
        pilot_pf = pilot_fails / pilot_counts
        sig = np.sqrt(pilot_pf * (1.0 - pilot_pf))
        if np.sum(weights * sig) <= 0.0:
            raise ValueError(
                "Neyman pilot saw no variance in any stratum; pass explicit "
                "pf guesses or enlarge the budget")
        main = largest_remainder(weights * sig, n - n_pilot)
        flags.append("neyman_pilot")
    else:
        main = allocate(alloc, strat, n)
        zero_marked = np.zeros(strat.m, dtype=bool)
        if alloc.kind == "neyman":
            zero_marked = np.asarray(alloc.pf_guesses, dtype=float) == 0.0
        elif alloc.kind == "general":
            zero_marked = np.asarray(alloc.gammas, dtype=float) == 0.0
        starved = (main == 0) & ~zero_marked
        if np.any(starved):
            raise ValueError(
                f"strata {np.flatnonzero(starved) + 1} received no samples at "
                f"budget {n}; increase n or drop strata")
        if np.any(zero_marked):
            flags.append("zero_count_strata")

    main_fails = np.zeros(strat.m, dtype=int)
    samples = allocated_samples(strat, main, rng, scheme)
    for i, x in samples.items():
        main_fails[i - 1] = int(np.count_nonzero(indicator(x)))

    counts = pilot_counts + main
    fails = pilot_fails + main_fails
    p_hat, var_hat, pf = _combine(weights, counts, fails)
    return _finish(p_hat, var_hat, _bias_bound(strat),
                   zip(counts, pf), counts.sum(),
                   "tss_unbiased" if strat.unbiased_tail else "tss",
                   flags)


def _tss_from_blocks(strat: TailStratification, indicator: _Indicator) -> FailureEstimate:
    """Estimate over an empirical stratification's own pool.

    Unweighted pools use the block failure fraction; importance-weighted
    pools use the self-normalized weighted fraction with the matching
    delta-method variance (both reduce to the plain forms at unit
    weights).
    """
    pay = strat.empirical
    weights = np.asarray(strat.strata_probs, dtype=float)
    m = strat.m
    counts = np.zeros(m, dtype=int)
    pf = np.zeros(m)
    var_pf = np.zeros(m)
    for i, block in enumerate(pay.blocks):
        x = pay.samples[block]
        fail = np.asarray(indicator(x), dtype=bool)
        counts[i] = len(block)
        if pay.weights is None:
            pf[i] = fail.mean()
            var_pf[i] = pf[i] * (1.0 - pf[i]) / counts[i]
        else:
            w = pay.weights[block]
            wsum = w.sum()
            pf[i] = float(np.sum(w * fail) / wsum)
            var_pf[i] = float(np.sum((w * (fail - pf[i])) ** 2) / wsum**2)
    p_hat = float(np.sum(weights * pf))
    var_hat = float(np.sum(weights**2 * var_pf))
    flags = tuple(strat.flags)
    return _finish(p_hat, var_hat, _bias_bound(strat), zip(counts, pf),
                   counts.sum(), "tss_unbiased" if strat.unbiased_tail else "tss",
                   flags)


def _min_one(counts: np.ndarray) -> np.ndarray:
    """Give every stratum at least one sample, taking seats from the largest."""
    counts = counts.copy()
    while np.any(counts == 0):
        counts[np.argmax(counts)] -= 1
        counts[np.argmin(counts)] += 1
    return counts


def tss_full_with_a0(strat: TailStratification, safe: SafeRegion,
                     indicator: _Indicator, alloc: AllocationStrategy,
                     n: int, n0: int, rng: RngStream, scheme: str = "mcs",
                     a0_sampler=None) -> FailureEstimate:
    """Stratified estimate that also samples the null stratum A_0.

    The tail part reuses exactly the same substreams as ``tss_estimate``,
    so at n0 = 0 the two results are identical; with n0 > 0 the A_0 term
    P(A_0) * pf_0 and its variance are added on top. Any failure observed
    inside A_0 flags the estimate (the null stratum was supposed to be
    safe) rather than being dropped.
    """
    tail = tss_estimate(strat, safe, indicator, alloc, n, rng, scheme)
    if n0 == 0:
        return tail
    if n0 < 0:
        raise ValueError("n0 must be nonnegative")
    if safe.kind == "empty":
        raise ValueError("the stratification has no null stratum to sample")
    sub = rng.substream(0, 0)
    if safe.kind == "gaussian_ball":
        x0 = sample_gaussian_ball(strat.d, safe.beta, n0, sub)
    else:
        if a0_sampler is None:
            raise ValueError("a predicate null stratum needs a0_sampler=")
        x0 = a0_sampler(sub.generator(), n0)
    pf0 = float(np.count_nonzero(indicator(x0))) / n0
    p0_term = safe.probability * pf0
    var0 = safe.probability**2 * pf0 * (1.0 - pf0) / n0
    flags = tail.flags + (("safe_region_violation",) if pf0 > 0.0 else ())
    return _finish(tail.p_hat + p0_term, tail.var_hat + var0, tail.bias_bound,
                   ((n0, pf0),) + tail.per_stratum, tail.n_g_evals + n0,
                   "tss_full", flags,
                   extra={"a0_term": p0_term, "tail_p_hat": tail.p_hat})


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def mcs_estimate(indicator: _Indicator,
                 sampler: Callable[[np.random.Generator, int], np.ndarray],
                 n: int, rng: RngStream, *, batch: int = 1_000_000) -> FailureEstimate:
    """Plain Monte Carlo: n draws from ``sampler``, binomial bookkeeping."""
    if n < 1:
        raise ValueError("n must be positive")
    gen = rng.generator()
    fails = 0
    remaining = n
    while remaining > 0:
        x = sampler(gen, min(batch, remaining))
        fails += int(np.count_nonzero(indicator(x)))
        remaining -= len(x)
    p_hat = fails / n
    var_hat = p_hat * (1.0 - p_hat) / n
    return _finish(p_hat, var_hat, 0.0, ((n, p_hat),), n, "mcs")


def importance_estimate(indicator: _Indicator,
                        log_f: Callable[[np.ndarray], np.ndarray],
                        log_q: Callable[[np.ndarray], np.ndarray],
                        q_sampler: Callable[[np.random.Generator, int], np.ndarray],
                        n: int, rng: RngStream) -> FailureEstimate:
    """Importance sampling against density q: p_hat = mean of (f/q) * I.

    Flags low effective sample size (ESS = n / (1 + cv_w^2) below 10) and
    degenerate estimates (no failure sample carried any weight).
    """
    if n < 1:
        raise ValueError("n must be positive")
    gen = rng.generator()
    x = q_sampler(gen, n)
    w = np.exp(np.asarray(log_f(x), dtype=float) - np.asarray(log_q(x), dtype=float))
    t = w * np.asarray(indicator(x), dtype=bool)
    p_hat = float(np.mean(t))
    var_hat = float(np.mean((t - p_hat) ** 2) / n)
    flags = []
    w_mean = float(np.mean(w))
    if w_mean > 0.0:
        cv2 = float(np.var(w)) / w_mean**2
        if n / (1.0 + cv2) < 10.0:
            flags.append("low_ess")
    if p_hat == 0.0:
        flags.append("degenerate")
    return _finish(p_hat, var_hat, 0.0, ((n, p_hat),), n, "importance", flags)
