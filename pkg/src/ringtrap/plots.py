"""Figure rendering for the CLI report paths.

Everything draws through the Agg backend and writes straight to files; the
library modules stay free of plotting concerns.
"""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def plot_cutoff_profile(profile, path) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    by_k = {}
    for row in profile.rows:
        by_k.setdefault(row.K, []).append(row)
    for K, rows in sorted(by_k.items()):
        rows.sort(key=lambda r: r.u)
        us = [r.u for r in rows]
        ps = [r.p_hat for r in rows]
        lo = [r.p_hat - r.lower for r in rows]
        hi = [r.upper - r.p_hat for r in rows]
        ax.errorbar(us, ps, yerr=[lo, hi], marker="o", ms=3, capsize=2,
                    label=f"K = {K}")
    ax.axvline(1.0, color="grey", lw=0.8, ls="--")
    ax.axhline(0.5, color="grey", lw=0.8, ls=":")
    ax.set_xlabel("time in units of $K^2 \\log K / \\pi^2$")
    ax.set_ylabel("P(still transient)")
    ax.set_title("Transience profile")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_transience_curve(rows, path) -> str:
    """rows: (t, estimate, lower, upper)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ts = [r[0] for r in rows]
    ps = [r[1] for r in rows]
    lo = [r[1] - r[2] for r in rows]
    hi = [r[3] - r[1] for r in rows]
    ax.errorbar(ts, ps, yerr=[lo, hi], marker="o", ms=4, capsize=3)
    ax.set_xlabel("t")
    ax.set_ylabel("P(still transient)")
    ax.set_title("Transience probability with Wilson 99% intervals")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_spectral(rows, path) -> str:
    """rows: dicts with K, s, tau_star, t_star."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ks = sorted({r["K"] for r in rows})
    for s in sorted({r["s"] for r in rows}):
        pts = sorted((r["K"], r["tau_star"]) for r in rows if r["s"] == s)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=4,
                label=f"$\\tau^*$, s = {s}")
    ax.plot(ks, [k * k * math.log(k) / math.pi**2 for k in ks], ls="--",
            color="black", label="$K^2 \\log K / \\pi^2$")
    ax.set_xlabel("K")
    ax.set_ylabel("time")
    ax.set_title("Occupation-threshold times against the cutoff location")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_occupation(K, ts, values, mc_points, path) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(ts, values, label="spectral sum")
    if mc_points:
        ax.plot([p[0] for p in mc_points], [p[1] for p in mc_points], "x",
                ms=8, label="Monte Carlo")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("expected particle count")
    ax.set_title(f"Reservoir segment occupation, K = {K}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_meeting_histogram(times, bound, epsilon, path) -> str:
    finite = np.asarray([t for t in times if math.isfinite(t)])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if len(finite):
        ax.hist(finite, bins=40, color="steelblue", alpha=0.8)
    if math.isfinite(bound):
        ax.axvline(bound, color="crimson", lw=1.5,
                   label=f"(1-{epsilon:g})-quantile")
        ax.legend()
    ax.set_xlabel("time all label pairs have met")
    ax.set_ylabel("replicas")
    ax.set_title("Meeting-time coupling")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
