"""Diagnostic figures rendered to SVG files.

Figures are emitted without timestamps and with a fixed hash salt so a
rerun with identical inputs produces byte-identical files.  Every data
series carries an XML group id (``series-<name>``) for downstream
checks.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "wcosinor"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_kappa_trace(trace, bound, unweighted_value, path):
    """Criterion-vs-concentration curve with the optimal-design ceiling
    (dotted) and the unweighted design's value (dashed)."""
    kappas = np.array([k for k, _ in trace])
    vals = np.array([v for _, v in trace])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    (line,) = ax.plot(kappas, vals, color="black", lw=1.2)
    line.set_gid("series-criterion")
    hb = ax.axhline(bound, color="red", ls=":", lw=1.0)
    hb.set_gid("series-bound")
    hu = ax.axhline(unweighted_value, color="blue", ls="--", lw=1.0)
    hu.set_gid("series-unweighted")
    ax.set_xscale("log")
    ax.set_xlabel("concentration")
    ax.set_ylabel("determinant criterion")
    _save(fig, path)


def plot_phase_sweep(summary, path):
    """Mean Wald statistic (over N) against base phase for each arm."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    styles = {
        "unweighted": dict(color="tab:red", ls="-"),
        "equispaced": dict(color="tab:green", ls="--"),
        "weighted": dict(color="tab:blue", ls="-."),
    }
    for arm, means in summary.mean_wald_over_n.items():
        (line,) = ax.plot(summary.phases, means, lw=1.4, label=arm,
                          **styles.get(arm, {}))
        line.set_gid(f"series-{arm}")
    ax.set_xlabel("base phase (radians)")
    ax.set_ylabel("mean Wald statistic / N")
    ax.set_xlim(0.0, 2.0 * math.pi)
    ax.legend(frameon=False)
    _save(fig, path)


def plot_comparison(unweighted, weighted, beta, path, statistic="wald"):
    """Weighted-vs-unweighted statistic scatter with the identity line
    and the fitted no-intercept slope."""
    u = np.asarray(unweighted, dtype=float)
    w = np.asarray(weighted, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    pts = ax.scatter(u, w, s=8, color="tab:blue", alpha=0.6)
    pts.set_gid("series-genes")
    hi = max(u.max(initial=0.0), w.max(initial=0.0)) * 1.05 or 1.0
    grid = np.array([0.0, hi])
    (ident,) = ax.plot(grid, grid, color="black", lw=1.0)
    ident.set_gid("series-identity")
    (fitline,) = ax.plot(grid, beta * grid, color="red", lw=1.2)
    fitline.set_gid("series-fit")
    ax.set_xlabel(f"unweighted {statistic} statistic")
    ax.set_ylabel(f"weighted {statistic} statistic")
    ax.set_xlim(0.0, hi)
    ax.set_ylim(0.0, hi)
    _save(fig, path)
