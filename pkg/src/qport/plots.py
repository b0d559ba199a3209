"""Figure rendering for swept TARC curves, bandwidth agreement, and Q sweeps.

Everything draws through the Agg backend and lands in files; nothing here
opens a window.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first

_DPI = 150


def tarc_figure(table, omega0: float, gamma_max: float, path) -> Path:
    """Swept TARC against the single-resonance model, band ceiling marked."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    x = table.omegas / omega0
    ax.plot(x, table.tarc, label="swept TARC", lw=1.8)
    ax.plot(x, table.tarc_model, "--", label="single-resonance model", lw=1.2)
    ax.axhline(gamma_max, color="gray", lw=0.8, ls=":", label=f"ceiling {gamma_max:g}")
    ax.set_xlabel(r"$\omega / \omega_0$")
    ax.set_ylabel("TARC")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def agreement_figure(rows, path) -> Path:
    """Predicted versus swept fractional bandwidth over the ceiling grid."""
    path = Path(path)
    gammas = [row.gamma_max for row in rows]
    pred = [row.f_predicted for row in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(gammas, pred, "o-", label="predicted 2 Gamma / Q", ms=4)
    swept_pts = [(g, row.f_swept) for g, row in zip(gammas, rows) if row.f_swept is not None]
    if swept_pts:
        ax.plot(*zip(*swept_pts), "s--", label="swept band edges", ms=4)
    ax.set_xlabel(r"TARC ceiling $\Gamma_{max}$")
    ax.set_ylabel("fractional bandwidth")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def sweep_figure(params, results, param_label: str, path) -> Path:
    """Q variants against a swept scenario parameter, failed rows skipped."""
    path = Path(path)
    series = {"q_tarc": [], "q_zm": [], "q_rad": [], "q_fbw": []}
    xs = {key: [] for key in series}
    for param, res in zip(params, results):
        if res.report is None:
            continue
        rep = res.report
        for key in series:
            val = getattr(rep, key)
            if val is not None and math.isfinite(val):
                xs[key].append(param)
                series[key].append(val)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    styles = {"q_tarc": "o-", "q_zm": "s--", "q_rad": "^-.", "q_fbw": "d:"}
    for key, style in styles.items():
        if series[key]:
            ax.plot(xs[key], series[key], style, label=key, ms=3.5, lw=1.2)
    ax.set_xlabel(param_label)
    ax.set_ylabel("Q")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
