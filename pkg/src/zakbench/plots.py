"""Figure rendering for the report paths (headless, files only)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "decay_figure",
    "xnorm_figure",
    "scattering_figure",
    "splits_figure",
    "resonance_figure",
    "ratio_figure",
]

_FIGSIZE = (6.4, 4.2)
_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def decay_figure(times, series: dict, fits: dict, path) -> None:
    """Log-log decay curves with their fitted power laws."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    times = np.asarray(times)
    for label, values in series.items():
        vals = np.asarray(values, dtype=float)
        mask = (vals > 0) & (times > 0)
        ax.loglog(times[mask], vals[mask], "o", ms=3, label=label)
        fit = fits.get(label)
        if fit is not None:
            tt = np.linspace(fit.window[0], fit.window[1], 50)
            ax.loglog(tt, np.exp(fit.intercept) * tt**fit.exponent, "-",
                      label=f"{label} fit: t^{fit.exponent:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def xnorm_figure(times, components: dict, bound, path) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for name, values in components.items():
        ax.plot(times, values, label=name)
    if bound is not None and math.isfinite(bound):
        ax.axhline(bound, color="k", ls="--", lw=1, label="bound")
    ax.set_xlabel("t")
    ax.set_ylabel("weighted component")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def scattering_figure(times, increments: dict, path) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for label, vals in increments.items():
        vals = np.asarray(vals, dtype=float)
        mask = vals > 0
        if mask.any():
            ax.semilogy(np.asarray(times)[mask], vals[mask], "o-", ms=3, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("Cauchy increment")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def splits_figure(times, x2_series, lowfreq: dict, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    t = np.asarray(times)
    v = np.asarray(x2_series)
    mask = (t > 0) & (v > 0)
    if mask.any():
        ax1.loglog(t[mask], v[mask], "o-", ms=3)
    ax1.set_xlabel("t")
    ax1.set_ylabel("||x^2 (localized piece)||")
    ax1.grid(True, which="both", alpha=0.3)
    ks = sorted(lowfreq)
    vals = np.asarray([lowfreq[k] for k in ks])
    pos = vals > 0
    if pos.any():
        ax2.semilogy(np.asarray(ks)[pos], vals[pos], "s-", ms=4)
    ax2.set_xlabel("dyadic k")
    ax2.set_ylabel("||P_{<=k} (far piece)||")
    ax2.grid(True, alpha=0.3)
    _save(fig, path)


def resonance_figure(scan, path) -> None:
    """Scatter of the scanned slice in (xi1, |eta|) coordinates."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for tag, cloud, style in (
        ("T", scan.time_set, dict(s=2, alpha=0.25, color="tab:blue")),
        ("S", scan.space_set, dict(s=4, alpha=0.5, color="tab:orange")),
        ("R", scan.resonant_set, dict(s=12, alpha=0.9, color="tab:red")),
    ):
        if len(cloud):
            eta_mag = np.hypot(cloud[:, 3], cloud[:, 4])
            ax.scatter(cloud[:, 0], eta_mag, label=tag, **style)
    ax.set_xlabel("xi_1")
    ax.set_ylabel("|eta|")
    ax.set_title(f"{scan.phase} (sign {scan.sign:+d}), res {scan.resolution}")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def ratio_figure(times, ratios, kind: str, path) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(times, ratios, "o-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("measured / bound shape")
    ax.set_title(kind)
    ax.grid(True, alpha=0.3)
    _save(fig, path)
