"""Command-line entry points for the experiment harness."""

from __future__ import annotations

import functools
import sys

import click

from .benchmarks import benchmark_names, get_benchmark
from .designpoint import multi_start_design_point
from .harness import ExperimentConfig, bias_study, convergence_study, run
from .rng import RngStream


def _parse_scalar(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _parse_params(pairs) -> dict:
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise click.BadParameter(
                f"expected key=value, got {pair!r}", param_hint="-P")
        params[key] = _parse_scalar(value)
    return params


def _parse_int_list(text: str, hint: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers",
                                 param_hint=hint)
    if not values:
        raise click.BadParameter("list is empty", param_hint=hint)
    return values


def _friendly_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, KeyError, RuntimeError) as exc:
            raise click.ClickException(str(exc))
    return wrapper


@click.group()
def main():
    """Rare-event failure probability estimation toolkit."""


@main.command("run")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--n", type=int, help="Override the sample budget.")
@click.option("--trials", type=int, help="Override the trial count.")
@click.option("--seed", type=int, help="Override the base seed.")
@click.option("--r0", type=float,
              help="Known null-stratum radius; skips the design-point search.")
@click.option("--output", type=str, help="Override the output directory.")
@click.option("--workers", type=int, help="Trial worker processes.")
@_friendly_errors
def run_cmd(config_path, n, trials, seed, r0, output, workers):
    """Run the experiment described by a TOML config file."""
    config = ExperimentConfig.from_toml(config_path)
    overrides = {k: v for k, v in
                 dict(n=n, trials=trials, seed=seed, r0=r0, output=output,
                      workers=workers).items() if v is not None}
    if overrides:
        config = config.replace(**overrides)
    report = run(config)
    agg = report.aggregate
    cov = agg["cov_over_trials"]
    click.echo(f"benchmark={config.benchmark} estimator={config.estimator} "
               f"trials={agg['n_trials']}")
    click.echo(f"mean p_hat = {agg['mean_p_hat']:.6g}   "
               f"CoV = {100 * cov:.2f}%" if cov is not None else
               f"mean p_hat = {agg['mean_p_hat']:.6g}   CoV = n/a")
    click.echo(f"mean g evals/trial = {agg['mean_n_g_evals']:.1f}")
    if report.design_point is not None:
        dp = report.design_point
        click.echo(f"design point: beta = {dp['beta']:.6g} "
                   f"({dp['g_evals']} g evals, "
                   f"{'converged' if dp['converged'] else 'NOT converged'})")
    if agg["flag_counts"]:
        click.echo(f"flags: {agg['flag_counts']}")
    if config.output:
        click.echo(f"wrote {config.output}/trials.csv, summary.json, "
                   "trials.png")


@main.command("bias-study")
@click.argument("benchmark")
@click.option("--m-list", default="1,2,3,4,5", show_default=True,
              help="Comma-separated stratum counts.")
@click.option("--per-stratum-n", default=3000, show_default=True, type=int)
@click.option("--trials", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--scheme", default="mcs", show_default=True,
              type=click.Choice(["mcs", "lhs"]))
@click.option("--null-stratum", default="design_point", show_default=True,
              type=click.Choice(["design_point", "none"]))
@click.option("--r0", type=float,
              help="Known null-stratum radius; skips the design-point search.")
@click.option("--output", type=str, help="Directory for CSV/JSON/figure.")
@click.option("--workers", type=int)
@click.option("-P", "param", multiple=True,
              help="Benchmark parameter, key=value (repeatable).")
@_friendly_errors
def bias_study_cmd(benchmark, m_list, per_stratum_n, trials, seed, scheme,
                   null_stratum, r0, output, workers, param):
    """Truncation-bias sweep over the number of strata."""
    study = bias_study(
        benchmark, _parse_int_list(m_list, "--m-list"), per_stratum_n,
        trials, seed=seed, benchmark_params=_parse_params(param),
        null_stratum=null_stratum, r0=r0, scheme=scheme, workers=workers,
        output=output)
    click.echo(f"{'m':>3} {'mean_error':>12} {'p2.5':>10} {'p50':>10} "
               f"{'p97.5':>10} {'bias_bound':>12}")
    for row in study.rows:
        click.echo(f"{row['m']:>3} {row['mean_error']:>12.4g} "
                   f"{row['p2_5']:>10.3g} {row['p50']:>10.3g} "
                   f"{row['p97_5']:>10.3g} "
                   f"{row['mean_bias_bound'] / study.reference_pf:>12.3g}")
    if output:
        click.echo(f"wrote {output}/bias_study.csv, .json, .png")


@main.command("convergence")
@click.argument("benchmark")
@click.option("--estimators", default="tss,sus", show_default=True,
              help="Comma-separated specs: tss, tss-lhs, tss-ml, sus, mcs.")
@click.option("--n-grid", default="1000,10000", show_default=True,
              help="Comma-separated budgets (per-level sizes for sus).")
@click.option("--trials", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--p0", default=0.1, show_default=True, type=float)
@click.option("--m", default=4, show_default=True, type=int)
@click.option("--null-stratum", default="design_point", show_default=True,
              type=click.Choice(["design_point", "predicate", "none"]))
@click.option("--r0", type=float,
              help="Known null-stratum radius; skips the design-point search.")
@click.option("--match-budgets/--no-match-budgets", default=True,
              show_default=True,
              help="Give non-SuS estimators the SuS mean eval budget.")
@click.option("--output", type=str, help="Directory for CSV/JSON/figure.")
@click.option("--workers", type=int)
@click.option("-P", "param", multiple=True,
              help="Benchmark parameter, key=value (repeatable).")
@_friendly_errors
def convergence_cmd(benchmark, estimators, n_grid, trials, seed, p0, m,
                    null_stratum, r0, match_budgets, output, workers, param):
    """CoV-versus-budget comparison across estimators."""
    specs = [s.strip() for s in estimators.split(",") if s.strip()]
    study = convergence_study(
        benchmark, specs, _parse_int_list(n_grid, "--n-grid"), trials,
        seed=seed, benchmark_params=_parse_params(param), p0=p0, m=m,
        null_stratum=null_stratum, r0=r0, match_budgets=match_budgets,
        workers=workers, output=output)
    click.echo(f"{'estimator':>10} {'n':>8} {'evals':>10} {'mean p_hat':>12} "
               f"{'CoV':>8} {'bad':>4}")
    for row in study.rows:
        cov = row["cov_over_trials"]
        cov_txt = f"{100 * cov:.1f}%" if cov is not None else "n/a"
        click.echo(f"{row['estimator']:>10} {row['n_config']:>8} "
                   f"{row['mean_n_g_evals']:>10.0f} "
                   f"{row['mean_p_hat']:>12.4g} {cov_txt:>8} "
                   f"{row['n_nonconverged']:>4}")
    for spec, slope in study.slopes.items():
        if slope is not None:
            click.echo(f"slope[{spec}] = {slope:.3f}")
    if output:
        click.echo(f"wrote {output}/convergence.csv, .json, .png")


@main.command("list-benchmarks")
@_friendly_errors
def list_benchmarks_cmd():
    """List the benchmark registry: name, dimension, reference P_F."""
    click.echo(f"{'name':<22} {'d':>6} {'reference_pf':>14} {'provenance':>12}")
    for name in benchmark_names():
        bench = get_benchmark(name)
        pf = "unknown" if bench.reference_pf is None \
            else f"{bench.reference_pf:.4g}"
        click.echo(f"{name:<22} {bench.d:>6} {pf:>14} "
                   f"{bench.pf_provenance:>12}")


@main.command("design-point")
@click.argument("benchmark")
@click.option("--starts", default=8, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("-P", "param", multiple=True,
              help="Benchmark parameter, key=value (repeatable).")
@_friendly_errors
def design_point_cmd(benchmark, starts, seed, param):
    """Search for the most probable failure point of a benchmark."""
    bench = get_benchmark(benchmark, **_parse_params(param))
    if bench.stochastic:
        raise click.ClickException(
            f"benchmark {benchmark!r} is stochastic; the design-point "
            "search needs a deterministic performance function")
    result = multi_start_design_point(bench.g, bench.d,
                                      RngStream(seed).substream(3),
                                      n_starts=starts)
    click.echo(f"beta = {result.beta:.8g}")
    click.echo(f"converged = {result.converged} "
               f"(g at point = {result.g_value:.3g}, "
               f"{result.g_evals} g evals)")
    head = ", ".join(f"{v:.5g}" for v in result.x_star[:8])
    more = ", ..." if bench.d > 8 else ""
    click.echo(f"x* = [{head}{more}]")
    if result.flags:
        click.echo(f"flags: {result.flags}")


if __name__ == "__main__":
    main()
