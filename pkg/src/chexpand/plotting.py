"""Report figures (Agg backend, PNG files next to the CSV output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_profile(profile, path: Path, n: int = 401) -> Path:
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
    if profile.hitting_time > 0:
        t = np.linspace(0.0, profile.hitting_time, n)
        ax[0].plot(t, profile.z(t))
        ax[1].plot(t, profile.dz(t))
    ax[0].set(xlabel="t", ylabel="z(t)", title=f"profile from {profile.alpha:g}")
    ax[1].set(xlabel="t", ylabel="z'(t)", title="speed")
    return _save(fig, path)


def plot_sweep(rows, predicted: float, path: Path) -> Path:
    eps = np.array([r["eps"] for r in rows])
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
    ax[0].semilogx(eps, [r["energy_g2"] for r in rows], "o-", label="minimizer")
    ax[0].axhline(predicted, color="k", ls="--", label="limit")
    ax[0].set(xlabel="eps", ylabel="second-order energy")
    ax[0].legend()
    ax[1].loglog(eps, [max(r["delta_negative"], 1e-16) for r in rows], "s-", label="max(-delta)")
    ax[1].loglog(eps, [r["rescaled_sup_distance"] for r in rows], "^-", label="rescaled sup distance")
    ax[1].set(xlabel="eps")
    ax[1].legend()
    return _save(fig, path)


def plot_minimizers(results, path: Path, window: float = 8.0) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for res in results:
        s = res.grid.nodes / res.eps
        keep = s <= window
        ax.plot(s[keep], res.v[keep], label=f"eps={res.eps:g}")
    ax.set(xlabel="t / eps", ylabel="v")
    ax.legend()
    return _save(fig, path)


def plot_expansion(report, path: Path) -> Path:
    eps = np.array([e for e, _ in report.per_eps_numeric_f2])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(eps, [v for _, v in report.per_eps_numeric_f2], "o-", label="minimizers")
    rec = [v for _, v in report.per_eps_recovery_f2]
    ax.semilogx(eps, rec, "s--", label="recovery")
    ax.axhline(report.predicted_f2, color="k", ls=":", label="predicted")
    ax.axhline(report.extrapolated_f2, color="C3", ls="-.", label="extrapolated")
    ax.set(xlabel="eps", ylabel="second-order value")
    ax.legend()
    return _save(fig, path)


def plot_slices(records, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for eps in sorted({r.eps for r in records}, reverse=True):
        sel = sorted((r for r in records if r.eps == eps), key=lambda r: (r.component, r.theta))
        ax.plot([r.theta for r in sel], [r.slice_g2 for r in sel], ".", label=f"eps={eps:g}")
    ax.set(xlabel="theta", ylabel="slice second-order energy")
    ax.legend()
    return _save(fig, path)
