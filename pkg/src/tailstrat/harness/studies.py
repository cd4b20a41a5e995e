"""Multi-run studies: truncation bias versus stratum count, and
CoV-versus-budget convergence with cross-method budget matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..benchmarks import get_benchmark
from .config import ExperimentConfig
from .runner import TrialReport, run

__all__ = ["BiasStudy", "ConvergenceStudy", "bias_study", "convergence_study"]

BIAS_COLUMNS = ("m", "per_stratum_n", "n", "mean_p_hat", "mean_error",
                "p2_5", "p25", "p50", "p75", "p97_5", "mean_bias_bound")
CONV_COLUMNS = ("estimator", "n_config", "mean_n_g_evals", "mean_p_hat",
                "cov_over_trials", "p25", "p75", "n_nonconverged")

ESTIMATOR_SPECS = ("tss", "tss-lhs", "tss-ml", "sus", "mcs")


def _write_csv(path: Path, columns, rows) -> None:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, str):
            return v
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return repr(float(v))

    lines = [",".join(columns)]
    lines += [",".join(cell(r[c]) for c in columns) for r in rows]
    path.write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class BiasStudy:
    """Normalized-error percentiles of the truncated estimator per m."""

    benchmark: str
    reference_pf: float
    rows: tuple[dict, ...]
    reports: tuple[TrialReport, ...]

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "bias_study.csv", BIAS_COLUMNS, self.rows)
        meta = {"benchmark": self.benchmark,
                "reference_pf": self.reference_pf,
                "rows": list(self.rows)}
        (out / "bias_study.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n")
        from . import figures
        figures.render_bias_study(self, out / "bias_study.png")
        return out


def bias_study(benchmark: str, m_list: Sequence[int], per_stratum_n: int,
               trials: int, *, seed: int = 0,
               benchmark_params: Mapping | None = None,
               null_stratum: str = "design_point", r0: float | None = None,
               scheme: str = "mcs",
               workers: int | None = None, output=None) -> BiasStudy:
    """Sweep the stratum count at fixed per-stratum sample size.

    Equal allocation with ``per_stratum_n`` samples per stratum isolates
    the truncation bias: deeper stratifications keep per-stratum noise
    constant while the omitted tail mass shrinks geometrically. Errors
    are normalized by the benchmark's reference probability.
    """
    params = dict(benchmark_params or {})
    bench = get_benchmark(benchmark, **params)
    if bench.reference_pf is None:
        raise ValueError(
            f"benchmark {benchmark!r} has no reference failure probability "
            "to normalize against")
    pf = bench.reference_pf
    rows: list[dict] = []
    reports: list[TrialReport] = []
    for m in m_list:
        config = ExperimentConfig(
            benchmark=benchmark, benchmark_params=params, estimator="tss",
            n=per_stratum_n * m, trials=trials, seed=seed, m=m,
            allocation="equal", scheme=scheme, null_stratum=null_stratum,
            r0=r0, workers=workers)
        report = run(config)
        errors = (report.p_hats() - pf) / pf
        pct = np.percentile(errors, [2.5, 25.0, 50.0, 75.0, 97.5])
        rows.append({
            "m": m,
            "per_stratum_n": per_stratum_n,
            "n": config.n,
            "mean_p_hat": report.aggregate["mean_p_hat"],
            "mean_error": float(errors.mean()),
            "p2_5": float(pct[0]),
            "p25": float(pct[1]),
            "p50": float(pct[2]),
            "p75": float(pct[3]),
            "p97_5": float(pct[4]),
            "mean_bias_bound": report.aggregate["mean_bias_bound"],
        })
        reports.append(report)
    study = BiasStudy(benchmark=benchmark, reference_pf=pf,
                      rows=tuple(rows), reports=tuple(reports))
    if output is not None:
        study.write(output)
    return study


@dataclass(frozen=True)
class ConvergenceStudy:
    """Empirical CoV over trials per (estimator, budget) grid point."""

    benchmark: str
    reference_pf: float | None
    rows: tuple[dict, ...]
    slopes: dict

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "convergence.csv", CONV_COLUMNS, self.rows)
        meta = {"benchmark": self.benchmark,
                "reference_pf": self.reference_pf,
                "slopes": self.slopes,
                "rows": list(self.rows)}
        (out / "convergence.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n")
        from . import figures
        figures.render_convergence(self, out / "convergence.png")
        return out


def _spec_config(spec: str, base: ExperimentConfig, n: int,
                 null_stratum: str) -> ExperimentConfig:
    def build(**changes) -> ExperimentConfig:
        if changes.get("null_stratum", "design_point") != "design_point":
            changes["r0"] = None
        return base.replace(**changes)

    if spec == "tss":
        return build(estimator="tss", scheme="mcs", n=n,
                     null_stratum=null_stratum)
    if spec == "tss-lhs":
        return build(estimator="tss", scheme="lhs", n=n,
                     null_stratum=null_stratum)
    if spec == "tss-ml":
        return build(estimator="tss", scheme="mcs", n=n,
                     null_stratum="predicate")
    if spec == "mcs":
        return build(estimator="mcs", n=n)
    if spec == "sus":
        return build(estimator="sus", scheme="mcs", n=n)
    raise ValueError(f"unknown estimator spec {spec!r}; "
                     f"known: {ESTIMATOR_SPECS}")


def convergence_study(benchmark: str, estimators: Sequence[str],
                      n_grid: Sequence[int], trials: int, *, seed: int = 0,
                      benchmark_params: Mapping | None = None,
                      p0: float = 0.1, m: int = 4,
                      null_stratum: str = "design_point",
                      r0: float | None = None,
                      match_budgets: bool = True,
                      n_probe: int = 1_000_000, max_levels: int = 20,
                      workers: int | None = None,
                      output=None) -> ConvergenceStudy:
    """CoV versus sample budget for several estimators on one benchmark.

    With ``match_budgets`` (and "sus" among the estimators), subset
    simulation runs first at each per-level size in ``n_grid`` and every
    other estimator then receives a total budget equal to the SuS mean
    evaluation count at that grid point, the two-pass protocol behind
    the head-to-head tables. Otherwise ``n_grid`` is used directly.

    The returned slopes map each estimator to the fitted log10(CoV) /
    log10(evaluations) regression slope (None with fewer than two
    usable grid points).
    """
    params = dict(benchmark_params or {})
    bench = get_benchmark(benchmark, **params)
    for spec in estimators:
        if spec not in ESTIMATOR_SPECS:
            raise ValueError(f"unknown estimator spec {spec!r}; "
                             f"known: {ESTIMATOR_SPECS}")
    base = ExperimentConfig(
        benchmark=benchmark, benchmark_params=params, trials=trials,
        seed=seed, p0=p0, m=m, n_probe=n_probe, max_levels=max_levels,
        workers=workers)
    if r0 is not None:
        base = base.replace(r0=r0)

    rows: list[dict] = []
    sus_reports: dict[int, TrialReport] = {}
    budgets = {n: n for n in n_grid}
    if "sus" in estimators:
        for n in n_grid:
            report = run(_spec_config("sus", base, n, null_stratum))
            sus_reports[n] = report
            if match_budgets:
                budgets[n] = int(round(report.aggregate["mean_n_g_evals"]))

    for spec in estimators:
        for n in n_grid:
            if spec == "sus":
                report = sus_reports[n]
            else:
                report = run(_spec_config(spec, base, budgets[n],
                                          null_stratum))
            agg = report.aggregate
            rows.append({
                "estimator": spec,
                "n_config": n if spec == "sus" else budgets[n],
                "mean_n_g_evals": agg["mean_n_g_evals"],
                "mean_p_hat": agg["mean_p_hat"],
                "cov_over_trials": agg["cov_over_trials"],
                "p25": agg["p25"],
                "p75": agg["p75"],
                "n_nonconverged": agg["flag_counts"].get(
                    "did_not_converge", 0),
            })

    slopes: dict[str, float | None] = {}
    for spec in estimators:
        pts = [(r["mean_n_g_evals"], r["cov_over_trials"]) for r in rows
               if r["estimator"] == spec and r["cov_over_trials"]
               and r["n_nonconverged"] == 0]
        if len(pts) >= 2:
            x = np.log10([p[0] for p in pts])
            y = np.log10([p[1] for p in pts])
            slopes[spec] = float(np.polyfit(x, y, 1)[0])
        else:
            slopes[spec] = None

    study = ConvergenceStudy(benchmark=benchmark,
                             reference_pf=bench.reference_pf,
                             rows=tuple(rows), slopes=slopes)
    if output is not None:
        study.write(output)
    return study
