"""File-target matplotlib rendering for experiment and CLI reports.

Every function writes one PNG next to the delimited output and returns the
path. The Agg backend is forced before pyplot is imported so rendering works
headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_trajectory_figure(path, ns, series, theory=None, title="",
                           ylabel="iterate"):
    """Convergence trajectories on a log-x axis.

    series: mapping label -> values aligned with ns. theory: optional
    horizontal reference level.
    """
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for label, values in series.items():
        ax.plot(ns, values, label=label, lw=1.2)
    if theory is not None:
        ax.axhline(theory, color="black", ls="--", lw=1.0,
                   label=f"limit {theory:.6g}")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_histogram_figure(path, samples, variance=None, title=""):
    """Histogram of rescaled terminal errors with the matching centered
    normal density overlaid when a variance is supplied."""
    samples = np.asarray(samples, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(samples, bins=60, density=True, alpha=0.65, color="#4878d0")
    if variance is not None and variance > 0:
        sd = float(np.sqrt(variance))
        grid = np.linspace(samples.min(), samples.max(), 400)
        pdf = np.exp(-0.5 * (grid / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
        ax.plot(grid, pdf, "k-", lw=1.4, label=f"N(0, {variance:.4g})")
        ax.legend(fontsize=8)
    ax.set_xlabel("rescaled error")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def save_qsl_figure(path, rows, theory=None, title=""):
    """Quadratic-strong-law statistic against n (rows = (n, value))."""
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(rows[:, 0], rows[:, 1], lw=1.2, label="normalized sum")
    if theory is not None:
        ax.axhline(theory, color="black", ls="--", lw=1.0,
                   label=f"limit {theory:.6g}")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("QSL statistic")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_lil_figure(path, rows, title=""):
    """Envelope-rescaled error (rows = (n, rescaled, const)) with the
    +/- envelope."""
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(rows[:, 0], rows[:, 1], lw=0.9, label="rescaled error")
    ax.plot(rows[:, 0], rows[:, 2], "k--", lw=1.0, label="envelope")
    ax.plot(rows[:, 0], -rows[:, 2], "k--", lw=1.0)
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("rescaled error")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_ci_figure(path, rows, title=""):
    """Streaming estimate with its confidence band.

    rows: (n, theta, sq, ci_lo, ci_hi); NaN CI cells are skipped in the band.
    """
    rows = np.asarray(rows, dtype=float)
    ns = rows[:, 0]
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ok = np.isfinite(rows[:, 3]) & np.isfinite(rows[:, 4])
    if ok.any():
        ax.fill_between(ns[ok], rows[ok, 3], rows[ok, 4],
                        alpha=0.25, color="#4878d0", label="CI")
    ax.plot(ns, rows[:, 2], lw=1.2, color="#4878d0", label="superquantile")
    ax.plot(ns, rows[:, 1], lw=1.0, color="#d65f5f", label="quantile")
    ax.set_xlabel("n")
    ax.set_ylabel("loss level")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_pn_figure(path, rows, limit=None, title="", ylabel="ratio"):
    """Step-product diagnostic (rows = (n, value)) against its limit."""
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(rows[:, 0], rows[:, 1], lw=1.2, label=ylabel)
    if limit is not None:
        ax.axhline(limit, color="black", ls="--", lw=1.0,
                   label=f"limit {limit:.8g}")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _finish(fig, path)
