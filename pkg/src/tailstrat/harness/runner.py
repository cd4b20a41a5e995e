"""Run R independent trials of an estimator on a benchmark.

Trial t draws from stream_id = t of the base seed, so any subset of
trials can be reproduced in isolation and results are identical whether
trials run serially or across worker processes. Every trial wraps the
performance function in a row counter and cross-checks the estimator's
reported n_g_evals against it, so the published evaluation budgets are
measured, not assumed.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from ..benchmarks import Benchmark, get_benchmark, standard_normal_sampler
from ..designpoint import multi_start_design_point
from ..estimator import (AllocationStrategy, FailureEstimate, mcs_estimate,
                         tss_estimate)
from ..probmath import log_std_normal_pdf_vector
from ..rng import RngStream
from ..stratification import (SafeRegion, TailStratification,
                              build_gaussian_radial, empirical_stratify,
                              null_stratum_empty,
                              null_stratum_from_design_point,
                              null_stratum_from_predicate)
from ..sus import subset_simulation
from .config import ExperimentConfig

__all__ = ["TrialReport", "run", "CSV_COLUMNS"]

CSV_COLUMNS = ("trial", "p_hat", "var_hat", "cov", "bias_bound",
               "n_g_evals", "seed", "flags")

# The null-stratum ball is shrunk a hair inside the design point so the
# certified-safe claim survives floating-point boundary classification.
_DP_SHRINK = 1.0 - 1e-6

_WORKERS_ENV = "TAILSTRAT_WORKERS"


class _CountingG:
    """Pass-through wrapper that counts evaluated rows."""

    def __init__(self, g: Callable):
        self._g = g
        self.rows = 0

    def __call__(self, x, *args):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        self.rows += x.shape[0]
        return self._g(x, *args)


@dataclass(frozen=True)
class TrialReport:
    """Per-trial rows plus the aggregate over trials.

    ``aggregate`` always contains: n_trials, mean_p_hat,
    cov_over_trials (None when the mean is zero), p25, p75,
    mean_bias_bound, mean_n_g_evals, total_n_g_evals, flag_counts, and
    reference_pf (None when the benchmark has no reference).
    ``design_point`` is present only for design-point null strata.
    """

    config: ExperimentConfig
    rows: tuple[dict, ...]
    aggregate: dict
    design_point: dict | None = None

    def p_hats(self) -> np.ndarray:
        return np.array([r["p_hat"] for r in self.rows])

    def write(self, out_dir) -> Path:
        """Persist config.toml, trials.csv, summary.json, and the figure."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.toml").write_text(self.config.to_toml_str())
        (out / "trials.csv").write_text(render_csv(self.rows))
        summary = {
            "config": self.config.to_dict(),
            "aggregate": self.aggregate,
            "design_point": self.design_point,
        }
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
        from . import figures
        figures.render_run_report(self, out / "trials.png")
        return out


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def render_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _workers(config: ExperimentConfig) -> int:
    if config.workers is not None:
        return config.workers
    env = os.environ.get(_WORKERS_ENV, "").strip()
    if env:
        count = int(env)
        if count < 1:
            raise ValueError(f"{_WORKERS_ENV} must be positive, got {env}")
        return count
    return 1


def _indicator(bench: Benchmark, counted: Callable,
               trial_rng: RngStream) -> Callable[[np.ndarray], np.ndarray]:
    if bench.stochastic:
        latent = trial_rng.substream(9).generator()
        return lambda x: np.asarray(counted(x, latent)) <= 0.0
    return lambda x: np.asarray(counted(x)) <= 0.0


def _validate_combo(config: ExperimentConfig, bench: Benchmark) -> None:
    if config.estimator == "sus" and bench.stochastic:
        raise ValueError(
            f"benchmark {bench.name!r} has a stochastic performance "
            "function; subset simulation cannot be used with it")
    if config.estimator in ("tss", "tss_unbiased"):
        if config.null_stratum == "design_point" and bench.stochastic \
                and config.r0 is None:
            raise ValueError(
                "design-point search needs a deterministic performance "
                "function; give an explicit r0 or use "
                "null_stratum='predicate' or 'none'")
        if config.null_stratum == "predicate" and bench.safe_predicate is None:
            raise ValueError(
                f"benchmark {bench.name!r} has no safe-region predicate; "
                "use null_stratum='design_point' or 'none'")


def _alloc(config: ExperimentConfig) -> AllocationStrategy:
    if config.allocation == "proportional":
        return AllocationStrategy.proportional()
    if config.allocation == "equal":
        return AllocationStrategy.equal()
    if config.allocation == "neyman":
        return AllocationStrategy.neyman(config.pf_guesses)
    return AllocationStrategy.general(config.gammas)


def _find_design_point(bench: Benchmark, config: ExperimentConfig,
                       base: RngStream) -> dict:
    counted = _CountingG(bench.g)
    result = multi_start_design_point(counted, bench.d, base.substream(3),
                                      n_starts=config.dp_starts)
    return {
        "beta": float(result.beta),
        "converged": bool(result.converged),
        "g_evals": int(counted.rows),
        "g_value": float(result.g_value),
        "flags": list(result.flags),
    }


def _radial_pieces(config: ExperimentConfig, bench: Benchmark,
                   r0: float) -> tuple[TailStratification, SafeRegion]:
    unbiased = config.estimator == "tss_unbiased"
    strat = build_gaussian_radial(bench.d, r0, config.p0, config.m,
                                  unbiased_tail=unbiased)
    if r0 == 0.0:
        return strat, null_stratum_empty()
    return strat, null_stratum_from_design_point(r0, bench.d)


def _rejection_pool(member: Callable, d: int, n: int,
                    gen: np.random.Generator,
                    *, max_draw_factor: int = 10_000
                    ) -> tuple[np.ndarray, int]:
    """Draw n points from the standard normal conditioned on NOT member."""
    batch = min(max(int(n), 10_000), 200_000)
    cap = max_draw_factor * n + batch
    parts: list[np.ndarray] = []
    got = 0
    drawn = 0
    while got < n:
        if drawn > cap:
            raise RuntimeError(
                f"tail pool infeasible: {drawn} draws yielded {got}/{n} "
                "points outside the safe region; P(tail) is too small for "
                "rejection sampling")
        x = gen.standard_normal((batch, d))
        drawn += batch
        keep = ~np.asarray(member(x), dtype=bool)
        if keep.any():
            parts.append(x[keep])
            got += int(np.count_nonzero(keep))
    return np.concatenate(parts)[:n], drawn


def _estimate_predicate_trial(config: ExperimentConfig, bench: Benchmark,
                              indicator: Callable,
                              trial_rng: RngStream) -> FailureEstimate:
    safe = null_stratum_from_predicate(
        bench.safe_predicate,
        sampler=standard_normal_sampler(bench.d),
        n_probe=config.n_probe,
        rng=trial_rng.substream(4))
    if safe.probability >= 1.0:
        raise RuntimeError(
            "the safe-region predicate accepted every probe sample; "
            "there is no tail left to stratify (raise n_probe or check "
            "the predicate)")
    pool, _ = _rejection_pool(safe.member, bench.d, config.n,
                              trial_rng.substream(2).generator())
    strat = empirical_stratify(
        pool,
        log_std_normal_pdf_vector,
        lambda x: np.linalg.norm(np.atleast_2d(x), axis=1),
        config.p0, config.m,
        prob_a_star=1.0 - safe.probability,
        unbiased_tail=(config.estimator == "tss_unbiased"))
    return tss_estimate(strat, safe, indicator,
                        AllocationStrategy.proportional(), None, trial_rng,
                        config.scheme)


def _run_one_trial(config: ExperimentConfig, bench: Benchmark,
                   strat: TailStratification | None,
                   safe: SafeRegion | None, trial: int) -> dict:
    trial_rng = RngStream(config.seed, stream_id=trial)
    counted = _CountingG(bench.g)
    if config.estimator == "mcs":
        est = mcs_estimate(_indicator(bench, counted, trial_rng),
                           standard_normal_sampler(bench.d), config.n,
                           trial_rng)
    elif config.estimator == "sus":
        est = subset_simulation(counted, bench.d, config.n, trial_rng,
                                level_fraction=config.p0,
                                max_levels=config.max_levels,
                                stochastic_g=bench.stochastic)
    elif config.null_stratum == "predicate":
        est = _estimate_predicate_trial(
            config, bench, _indicator(bench, counted, trial_rng), trial_rng)
    else:
        est = tss_estimate(strat, safe,
                           _indicator(bench, counted, trial_rng),
                           _alloc(config), config.n, trial_rng, config.scheme)
    if counted.rows != est.n_g_evals:
        raise RuntimeError(
            f"evaluation accounting broke: estimator reports "
            f"{est.n_g_evals} g evaluations, counter saw {counted.rows}")
    row = {"trial": trial, "seed": config.seed}
    row.update(est.to_record())
    return row


def _build_shared(config: ExperimentConfig
                  ) -> tuple[Benchmark, TailStratification | None,
                             SafeRegion | None, dict | None]:
    bench = get_benchmark(config.benchmark, **dict(config.benchmark_params))
    _validate_combo(config, bench)
    strat = safe = dp_info = None
    if config.estimator in ("tss", "tss_unbiased"):
        if config.null_stratum == "design_point":
            if config.r0 is not None:
                dp_info = {"beta": float(config.r0), "converged": True,
                           "g_evals": 0, "g_value": None,
                           "flags": [], "source": "config"}
            else:
                dp_info = _find_design_point(bench, config,
                                             RngStream(config.seed))
                dp_info["source"] = "search"
            r0 = dp_info["beta"] * _DP_SHRINK
            strat, safe = _radial_pieces(config, bench, r0)
        elif config.null_stratum == "none":
            strat, safe = _radial_pieces(config, bench, 0.0)
        # predicate strata are per-trial (the pool is part of the estimator)
    return bench, strat, safe, dp_info


def _trial_batch(config_dict: dict, trials: list[int]) -> list[dict]:
    """Worker entry point: rebuild everything locally, run a trial slice."""
    config = ExperimentConfig.from_dict(config_dict)
    bench, strat, safe, _ = _build_shared(config)
    return [_run_one_trial(config, bench, strat, safe, t) for t in trials]


def _aggregate(config: ExperimentConfig, bench: Benchmark,
               rows: tuple[dict, ...], dp_info: dict | None) -> dict:
    p_hats = np.array([r["p_hat"] for r in rows], dtype=float)
    mean = float(p_hats.mean())
    if len(p_hats) > 1 and mean > 0.0:
        cov = float(p_hats.std(ddof=1) / mean)
    else:
        cov = None
    p25, p75 = (float(v) for v in np.percentile(p_hats, [25.0, 75.0]))
    flag_counts: dict[str, int] = {}
    for row in rows:
        for flag in filter(None, row["flags"].split(";")):
            flag_counts[flag] = flag_counts.get(flag, 0) + 1
    total_evals = int(sum(r["n_g_evals"] for r in rows))
    agg = {
        "n_trials": len(rows),
        "mean_p_hat": mean,
        "cov_over_trials": cov,
        "p25": p25,
        "p75": p75,
        "mean_bias_bound": float(np.mean([r["bias_bound"] for r in rows])),
        "mean_n_g_evals": total_evals / len(rows),
        "total_n_g_evals": total_evals,
        "flag_counts": flag_counts,
        "reference_pf": bench.reference_pf,
    }
    if dp_info is not None:
        agg["design_point_g_evals"] = dp_info["g_evals"]
        agg["total_n_g_evals_with_design_point"] = (
            total_evals + dp_info["g_evals"])
    return agg


def run(config: ExperimentConfig) -> TrialReport:
    """Execute the experiment; write outputs if config.output is set."""
    bench, strat, safe, dp_info = _build_shared(config)
    n_workers = _workers(config)
    trials = list(range(config.trials))
    if n_workers <= 1 or config.trials == 1:
        rows = [_run_one_trial(config, bench, strat, safe, t) for t in trials]
    else:
        config_dict = config.to_dict()
        slices = [trials[i::n_workers] for i in range(n_workers)]
        slices = [s for s in slices if s]
        with ProcessPoolExecutor(max_workers=len(slices)) as pool:
            batches = list(pool.map(_trial_batch,
                                    [config_dict] * len(slices), slices))
        rows = sorted((row for batch in batches for row in batch),
                      key=lambda r: r["trial"])
    rows = tuple(rows)
    report = TrialReport(config=config, rows=rows,
                         aggregate=_aggregate(config, bench, rows, dp_info),
                         design_point=dp_info)
    if config.output is not None:
        report.write(config.output)
    return report
