"""Figure builders: output directories in, matplotlib Figure objects out.

This module selects the Agg backend so the command-line tools work on
headless machines; import order therefore matters only in that pyplot is
first touched here.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend chosen above)

from .readers import read_manifest, read_table, snapshot_series  # noqa: E402

_ROWS = (("hist_alpha", "Alpha density"),
         ("hist_beta", "Beta density"),
         ("field", "chemical c"))


def clustering_figure(run_dir):
    """3x4 panel grid: both species' histograms and the chemical field at
    the four snapshot times, one shared color scale per row."""
    series = [(label, snapshot_series(run_dir, stem))
              for stem, label in _ROWS]
    fig, axes = plt.subplots(3, 4, figsize=(12.5, 8.5), sharex=True,
                             sharey=True, constrained_layout=True)
    for r, (label, snaps) in enumerate(series):
        vmax = max(float(s.values.max()) for s in snaps) or 1.0
        image = None
        for k, snap in enumerate(snaps):
            ax = axes[r, k]
            image = ax.imshow(snap.values, origin="lower", vmin=0.0,
                              vmax=vmax, cmap="viridis",
                              extent=(snap.lo, snap.hi, snap.lo, snap.hi))
            if r == 0:
                ax.set_title(f"t = {snap.t:.3g}")
            if r == 2:
                ax.set_xlabel("x")
        axes[r, 0].set_ylabel(f"{label}\ny")
        fig.colorbar(image, ax=axes[r, :], shrink=0.9, pad=0.015)
    return fig


def counts_figure(run_dir):
    """Species counts vs time with standard-error bands and their sum.

    When the manifest shows a pure conversion run (forward rate only), the
    matching exponential decay of the first species is drawn as a
    reference curve.
    """
    table = read_table(Path(run_dir) / "counts.csv")
    t = table["t"]
    fig, ax = plt.subplots(figsize=(7.0, 4.5), constrained_layout=True)
    for prefix, color, label in (("n_alpha", "tab:blue", "Alpha"),
                                 ("n_beta", "tab:orange", "Beta")):
        mean, se = table[f"{prefix}_mean"], table[f"{prefix}_se"]
        ax.plot(t, mean, color=color, label=label)
        ax.fill_between(t, mean - se, mean + se, color=color, alpha=0.3,
                        linewidth=0)
    total = table["n_alpha_mean"] + table["n_beta_mean"]
    ax.plot(t, total, color="0.3", linestyle="--", label="total")

    manifest = read_manifest(run_dir)
    config = (manifest or {}).get("config", {})
    rate = config.get("r_alpha", 0.0)
    if rate > 0.0 and config.get("r_beta", 1.0) == 0.0:
        n0 = float(table["n_alpha_mean"][0])
        ref = n0 * np.exp(-rate * t)
        ax.plot(t, ref, color="black", linestyle=":",
                label=f"{n0:g} exp(-{rate:g} t)")

    ax.set_xlabel("t")
    ax.set_ylabel("mean particle count")
    ax.legend(loc="center right")
    return fig


def msd_figure(run_dirs):
    """Mean squared displacement of several runs on one pair of axes:
    linear main plot with standard-error bands, log-log inset."""
    curves = []
    for run_dir in run_dirs:
        table = read_table(Path(run_dir) / "msd.csv")
        curves.append((Path(run_dir).name, table["t"], table["msd_mean"],
                       table["msd_se"]))
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    inset = ax.inset_axes([0.08, 0.56, 0.38, 0.4])
    for name, t, mean, se in curves:
        line, = ax.plot(t, mean, label=name)
        ax.fill_between(t, mean - se, mean + se, alpha=0.3, linewidth=0,
                        color=line.get_color())
        positive = t > 0
        inset.loglog(t[positive], mean[positive], color=line.get_color())
    ax.set_xlabel("t")
    ax.set_ylabel("mean squared displacement")
    ax.legend(loc="lower right")
    inset.set_title("log-log", fontsize="small")
    inset.tick_params(labelsize="x-small")
    return fig


def save(fig, out_path, dpi: int = 150) -> None:
    """Write the figure and release it."""
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
