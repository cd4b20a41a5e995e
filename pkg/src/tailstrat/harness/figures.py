"""Figure rendering for harness outputs (always to files, never a GUI)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_run_report", "render_bias_study", "render_convergence"]


def render_run_report(report, path) -> None:
    """Histogram of per-trial estimates with the reference value marked."""
    p_hats = report.p_hats()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.hist(p_hats, bins=min(40, max(8, len(p_hats) // 5)),
            color="#4878a8", edgecolor="white")
    ref = report.aggregate.get("reference_pf")
    if ref:
        ax.axvline(ref, color="#c44e52", lw=1.8, label=f"reference {ref:.3g}")
    mean = report.aggregate["mean_p_hat"]
    ax.axvline(mean, color="#333333", lw=1.2, ls="--",
               label=f"trial mean {mean:.3g}")
    cov = report.aggregate["cov_over_trials"]
    cov_txt = f"{100 * cov:.1f}%" if cov is not None else "n/a"
    ax.set_xlabel("estimated failure probability")
    ax.set_ylabel("trials")
    ax.set_title(f"{report.config.benchmark} / {report.config.estimator} "
                 f"(n={report.config.n}, R={report.config.trials}, "
                 f"CoV {cov_txt})")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_bias_study(study, path) -> None:
    """Normalized-error percentile bands against the stratum count."""
    ms = [r["m"] for r in study.rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    lo95 = [r["p2_5"] for r in study.rows]
    hi95 = [r["p97_5"] for r in study.rows]
    lo50 = [r["p25"] for r in study.rows]
    hi50 = [r["p75"] for r in study.rows]
    med = [r["p50"] for r in study.rows]
    ax.fill_between(ms, lo95, hi95, color="#4878a8", alpha=0.20,
                    label="2.5-97.5%")
    ax.fill_between(ms, lo50, hi50, color="#4878a8", alpha=0.45,
                    label="25-75%")
    ax.plot(ms, med, color="#1f3f5f", marker="o", label="median")
    ax.axhline(0.0, color="#c44e52", lw=1.0)
    ax.set_xlabel("number of tail strata m")
    ax.set_ylabel("normalized error (p_hat - P_F) / P_F")
    ax.set_xticks(list(ms))
    ax.set_title(f"{study.benchmark}: truncation bias vs strata "
                 f"(P_F = {study.reference_pf:.3g})")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_convergence(study, path) -> None:
    """Log-log CoV against mean evaluation budget per estimator."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    colors = {"tss": "#4878a8", "tss-lhs": "#6aa84f", "tss-ml": "#8e63b5",
              "sus": "#c44e52", "mcs": "#937860"}
    specs = sorted({r["estimator"] for r in study.rows})
    for spec in specs:
        pts = [(r["mean_n_g_evals"], r["cov_over_trials"],
                r["n_nonconverged"]) for r in study.rows
               if r["estimator"] == spec]
        good = [(x, y) for x, y, bad in pts if y is not None and not bad]
        color = colors.get(spec, "#555555")
        if good:
            xs, ys = zip(*good)
            slope = study.slopes.get(spec)
            label = spec if slope is None else f"{spec} (slope {slope:.2f})"
            ax.loglog(xs, ys, marker="o", color=color, label=label)
        bad = [x for x, y, nbad in pts if y is None or nbad]
        if bad:
            ax.plot(bad, [1.0] * len(bad), ls="none", marker="x",
                    color=color, label=f"{spec} (not converged)")
    ax.set_xlabel("mean performance-function evaluations")
    ax.set_ylabel("CoV over trials")
    ax.set_title(f"{study.benchmark}: convergence")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
