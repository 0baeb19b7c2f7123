"""Figure rendering for the CLI report path.

Each helper takes rows as produced by ``reports.load_csv`` (so any emitted
CSV can be re-plotted later) and writes a PNG next to the delimited output.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not (isinstance(x, float) and math.isnan(x))


def plot_bench_cosine(agg_rows: list[dict], path: str):
    """Mean cosine similarity vs sample count, one line per estimator."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    names = dict.fromkeys(row["estimator"] for row in agg_rows)
    for name in names:
        rows = sorted((r for r in agg_rows if r["estimator"] == name),
                      key=lambda r: r["S"])
        s = [r["S"] for r in rows]
        mean = [r["cosine_mean"] for r in rows]
        std = [r["cosine_std"] for r in rows]
        ax.errorbar(s, mean, yerr=std, marker="o", capsize=2, label=name)
    ax.set_xscale("log")
    ax.set_xlabel("samples per estimate")
    ax.set_ylabel("cosine similarity to true gradient")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep_lambda(agg_rows: list[dict], path: str):
    """Cosine and sparsity vs step size; adaptive rows appear as level lines."""
    fixed = [r for r in agg_rows if _finite(r["lambda"])]
    adaptive = [r for r in agg_rows if r["lambda"] == "adaptive"]
    fixed.sort(key=lambda r: r["lambda"])
    lams = [r["lambda"] for r in fixed]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)
    ax1.errorbar(lams, [r["cosine_mean"] for r in fixed],
                 yerr=[r["cosine_std"] for r in fixed], marker="o", capsize=2,
                 label=fixed[0]["estimator"] if fixed else "fixed step")
    for r in adaptive:
        ax1.axhline(r["cosine_mean"], linestyle="--", color="tab:red",
                    label=f"{r['estimator']} (adaptive)")
    ax1.set_ylabel("cosine similarity")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(lams, [r["zero_fraction_mean"] for r in fixed], marker="o")
    ax2.set_xlabel("step size")
    ax2.set_ylabel("zero fraction of estimate")
    ax2.set_ylim(-0.05, 1.05)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_trajectory(rows: list[dict], path: str):
    """Training loss plus the step-size/controller trace over iterations."""
    steps = [r["step"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)
    ax1.plot(steps, [r["loss"] for r in rows], color="tab:blue")
    ax1.set_ylabel("exact expected loss")
    ax1.grid(alpha=0.3)
    lam = [r["lambda"] for r in rows]
    if any(_finite(v) for v in lam):
        ax2.plot(steps, lam, color="tab:green", label="step size")
    alpha = [r["alpha"] for r in rows]
    if any(_finite(v) for v in alpha):
        ax2.plot(steps, alpha, color="tab:orange", label="alpha")
        ax2.plot(steps, [r["g_bar"] for r in rows], color="tab:purple",
                 alpha=0.6, label="sparsity EMA")
    ax2.set_xlabel("step")
    ax2.legend(fontsize=8)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bias(rows: list[dict], path: str):
    """Norms of the expected finite-difference estimate vs step size."""
    rows = sorted(rows, key=lambda r: r["lambda"])
    lams = [r["lambda"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.loglog(lams, [r["unscaled_norm"] for r in rows], marker="o",
              label="expected unscaled estimate")
    ax.loglog(lams, [r["bias_norm"] for r in rows], marker="s",
              label="bias of scaled estimate")
    ax.axhline(rows[0]["exact_norm"], linestyle=":", color="gray",
               label="true gradient norm")
    ax.set_xlabel("step size")
    ax.set_ylabel("L2 norm")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
