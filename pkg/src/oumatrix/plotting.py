"""Figures for experiment reports, rendered headlessly to PNG files."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, out: Path, name: str) -> str:
    fig.tight_layout()
    fig.savefig(out / name, dpi=110)
    _pyplot().close(fig)
    return name


def _gue(data, out, plt):
    hist, theory = data["hist"], data["theory"]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.stairs(hist.density, hist.edges, label="histogram")
    ax.stairs(theory, hist.edges, label="semicircle (bin average)")
    ax.set_xlabel("eigenvalue")
    ax.set_ylabel("density")
    ax.legend()
    return [_save(fig, out, "gue_density.png")]


def _disc(data, out, plt):
    hist, vals = data["hist"], data["eigenvalues"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    v = vals.ravel()[:20000]
    ax1.plot(v.real, v.imag, ",", alpha=0.5)
    ax1.set_aspect("equal")
    ax1.set_title("eigenvalues")
    ax2.stairs(hist.density, hist.edges)
    ax2.axhline(1 / (np.pi * data["radius"] ** 2), ls="--", color="k")
    ax2.set_xlabel("|z|")
    ax2.set_ylabel("density")
    return [_save(fig, out, "ginibre_density.png")]


def _overlap(data, out, plt):
    f, theory = data["field"], data["theory"]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    c = f.centers
    ax.errorbar(c, f.value, yerr=f.se, fmt="o", label="binned overlaps")
    r = np.linspace(0, f.edges[-2], 200)
    ax.plot(r, np.clip(1 - r * r / f.edges[-2] ** 2, 0, None) / (np.pi * f.edges[-2] ** 2), label="parabolic law")
    ax.set_xlim(0, f.edges[-2] * 1.1)
    ax.set_xlabel("|z|")
    ax.set_ylabel("overlap correlator")
    ax.legend()
    return [_save(fig, out, "overlap_correlator.png")]


def _edge(data, out, plt):
    p = data["profile"]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(p.centers, p.density, yerr=p.se, fmt="o", ms=3, label="simulation")
    ax.stairs(data["theory"], p.eta_edges, label="erfc law")
    ax.stairs(data["exact"], p.eta_edges, ls=":", label="exact finite N")
    ax.set_xlabel("eta")
    ax.set_ylabel("density")
    ax.legend()
    return [_save(fig, out, "edge_profile.png")]


def _acp(data, out, plt):
    g, est, th = data["grid"], data["est"], data["theory"]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(np.abs(th).ravel(), np.abs(est.value).ravel(), yerr=np.asarray(est.se).ravel(), fmt="o", ms=3)
    lim = [0, np.abs(th).max() * 1.05]
    ax.plot(lim, lim, "k--")
    ax.set_xlabel("|exact|")
    ax.set_ylabel("|Monte Carlo|")
    return [_save(fig, out, "acp.png")]


def _qdet(data, out, plt):
    rows = np.array([(r[5], r[2], r[4]) for r in data["rows"]])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(rows[:, 0], rows[:, 1], yerr=rows[:, 2], fmt="o", ms=3)
    lim = [0, rows[:, 0].max() * 1.05]
    ax.plot(lim, lim, "k--")
    ax.set_xlabel("exact")
    ax.set_ylabel("Monte Carlo")
    return [_save(fig, out, "qdet.png")]


def _dyson(data, out, plt):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    bins = np.linspace(min(data["matrix"].min(), data["dyson"].min()), max(data["matrix"].max(), data["dyson"].max()), 50)
    ax1.hist(data["matrix"].ravel(), bins, density=True, histtype="step", label="matrix level")
    ax1.hist(data["dyson"].ravel(), bins, density=True, histtype="step", label="eigenvalue level")
    ax1.legend()
    rec = data["record"]
    ax2.plot(rec.times, rec.eigenvalues.real, lw=0.6)
    ax2.set_xlabel("tau")
    return [_save(fig, out, "dyson.png")]


def _two_by_two(data, out, plt):
    ens, k = data["ensemble"], data["closest"]
    rec = ens.record(k)
    fig, axes = plt.subplots(3, 1, figsize=(6, 6), sharex=True)
    axes[0].plot(rec.times, rec.distance)
    axes[0].set_ylabel("distance")
    axes[1].plot(rec.times, rec.overlap)
    axes[1].set_ylabel("O11")
    axes[2].plot(rec.times[1:], np.abs(rec.jumps[:, 0]), lw=0.5)
    axes[2].set_ylabel("|jump|")
    axes[2].set_xlabel("tau")
    names = [_save(fig, out, "two_by_two.png")]
    g = data["gue_record"]
    fig, axes = plt.subplots(2, 1, figsize=(6, 4), sharex=True)
    axes[0].plot(g.times, g.distance)
    axes[0].set_ylabel("distance")
    axes[1].plot(g.times[1:], np.abs(g.jumps[:, 0]), lw=0.5)
    axes[1].set_ylabel("|jump|")
    names.append(_save(fig, out, "gue_two_by_two.png"))
    return names


def _pde(data, out, plt):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(data["acp"], "o", ms=3, label="ACP")
    ax.semilogy(data["qdet"], "s", ms=3, label="qdet")
    ax.axhline(1e-5, color="k", ls="--")
    ax.set_xlabel("probe")
    ax.set_ylabel("relative residual")
    ax.legend()
    return [_save(fig, out, "pde_residuals.png")]


_PLOTTERS = {
    "gue-semicircle": _gue,
    "ginibre-disc": _disc,
    "overlap-law": _overlap,
    "edge-erfc": _edge,
    "acp-verify": _acp,
    "qdet-verify": _qdet,
    "dyson-trajectories": _dyson,
    "two-by-two": _two_by_two,
    "pde-residuals": _pde,
}


def plot_experiment(experiment: str, data: dict, out_dir) -> list[str]:
    """Render the figures for one experiment; returns the file names written."""
    return _PLOTTERS[experiment](data, Path(out_dir), _pyplot())
