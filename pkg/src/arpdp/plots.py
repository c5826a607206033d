"""Figures for sweep reports, written next to the CSV/JSON output."""

from __future__ import annotations

import os
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import UtilityReport  # noqa: E402
from .mechanisms import MECHANISMS, uses_delta  # noqa: E402

STYLE = {
    "naive": dict(color="#1f77b4", marker="o", ls="-"),
    "naive_delta": dict(color="#1f77b4", marker="s", ls="--"),
    "histogram": dict(color="#d62728", marker="o", ls="-"),
    "histogram_delta": dict(color="#d62728", marker="s", ls="--"),
}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "arpdp",
}

# No software/date stamps, so reruns produce identical files.
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def _ok(reports):
    return [r for r in reports if r.error is None and r.rmse is not None]


def _by_mechanism(reports, delta_prime=None) -> Dict[str, List[UtilityReport]]:
    out = {}
    for m in MECHANISMS:
        rows = [r for r in reports if r.mechanism == m
                and (not uses_delta(m) or delta_prime is None or r.delta_prime == delta_prime)]
        if rows:
            out[m] = sorted(rows, key=lambda r: r.epsilon)
    return out


def _label(m, dp):
    return f"{m} (δ'={dp:g})" if uses_delta(m) and dp is not None else m


def plot_rmse_vs_epsilon(reports, path, delta_prime=None):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for m, rows in _by_mechanism(reports, delta_prime).items():
        ax.errorbar([r.epsilon for r in rows], [r.rmse for r in rows],
                    yerr=[r.rmse_std or 0.0 for r in rows], capsize=2, ms=4, lw=1.2,
                    label=_label(m, delta_prime), **STYLE[m])
    ax.set_xlabel("ε")
    ax.set_ylabel("RMSE")
    ax.set_yscale("log")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_utility_gain(reports, path, delta_prime=None):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for m, rows in _by_mechanism(reports, delta_prime).items():
        rows = [r for r in rows if r.utility_gain is not None]
        if not uses_delta(m) or not rows:
            continue
        ax.plot([r.epsilon for r in rows], [r.utility_gain for r in rows], ms=4, lw=1.2,
                label=_label(m, delta_prime), **STYLE[m])
    ax.axhline(0.0, color="0.5", lw=0.8)
    ax.set_xlabel("ε")
    ax.set_ylabel("utility gain (%)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_detection(reports, path, delta_prime=None):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.5, 3.2), sharey=True)
    for m, rows in _by_mechanism(reports, delta_prime).items():
        t_rows = [r for r in rows if r.tpr is not None]
        f_rows = [r for r in rows if r.f1 is not None]
        ax1.plot([r.epsilon for r in t_rows], [r.tpr for r in t_rows], ms=4, lw=1.2,
                 label=_label(m, delta_prime), **STYLE[m])
        ax2.plot([r.epsilon for r in f_rows], [r.f1 for r in f_rows], ms=4, lw=1.2, **STYLE[m])
    for ax, name in ((ax1, "TPR"), (ax2, "F1")):
        ax.axhline(0.75, color="0.6", lw=0.8, ls=":")
        ax.set_xlabel("ε")
        ax.set_ylabel(name)
        ax.set_ylim(-0.02, 1.02)
    ax1.legend(frameon=False)
    return _save(fig, path)


def plot_rmse_vs_delta_prime(reports, path, epsilon):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for m in MECHANISMS:
        if not uses_delta(m):
            continue
        rows = sorted((r for r in reports if r.mechanism == m and r.epsilon == epsilon and r.rmse is not None),
                      key=lambda r: r.delta_prime)
        if rows:
            ax.plot([r.delta_prime for r in rows], [r.rmse for r in rows], ms=4, lw=1.2, label=m, **STYLE[m])
    ax.set_xscale("log")
    ax.set_xlabel("δ'")
    ax.set_ylabel(f"RMSE (ε={epsilon:g})")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_sweep(reports: Sequence[UtilityReport], outdir: str) -> List[str]:
    """Render every figure the sweep grid supports; returns the written paths."""
    reports = _ok(reports)
    if not reports:
        return []
    os.makedirs(outdir, exist_ok=True)
    dps = sorted({r.delta_prime for r in reports if r.delta_prime is not None})
    main_dp = 0.01 if 0.01 in dps else (dps[-1] if dps else None)
    paths = []
    with plt.rc_context(RC):
        paths.append(plot_rmse_vs_epsilon(reports, os.path.join(outdir, "rmse_vs_epsilon.png"), main_dp))
        if any(r.utility_gain is not None for r in reports):
            paths.append(plot_utility_gain(reports, os.path.join(outdir, "utility_gain_vs_epsilon.png"), main_dp))
        if any(r.tpr is not None or r.f1 is not None for r in reports):
            paths.append(plot_detection(reports, os.path.join(outdir, "detection_vs_epsilon.png"), main_dp))
        if len(dps) > 1:
            eps_values = sorted({r.epsilon for r in reports if r.delta_prime is not None})
            eps = 1.0 if 1.0 in eps_values else eps_values[0]
            paths.append(plot_rmse_vs_delta_prime(reports, os.path.join(outdir, "rmse_vs_delta_prime.png"), eps))
    return paths
