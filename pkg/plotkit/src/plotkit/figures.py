"""The six figure renderers.

Every renderer reads its inputs fully before any drawing starts and writes
the image through a temp-file rename, so a failed render never leaves a
partial output. Style is pinned (STYLE_VERSION); identical inputs render
identical images.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .readers import (
    load_generalize,
    load_generation_logs,
    load_heatcap,
    load_operators,
    load_perturbation,
)

STYLE_VERSION = 1

_RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}

_TAG_COLORS = {"copy": "#4c72b0", "mutate": "#dd8452", "mate": "#55a868"}


def _save(fig, out_path: Path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_name(out_path.name + ".tmp")
    fig.savefig(tmp, format=out_path.suffix.lstrip(".") or "png",
                metadata={"Software": f"plotkit {__version__}"})
    plt.close(fig)
    os.replace(tmp, out_path)


def render_heatcap(run_dir: Path, out_path: Path) -> None:
    """Per-organism heat-capacity curves on log-x with peak markers."""
    curves, regime = load_heatcap(run_dir)
    peak_of = {r["organism"]: r for r in regime}
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        cmap = plt.get_cmap("viridis")
        n = max(len(curves), 2)
        for i, (org, (grid, values)) in enumerate(curves.items()):
            color = cmap(i / (n - 1))
            ax.plot(grid, values, color=color, alpha=0.8)
            info = peak_of.get(org)
            if info is not None and info["flag"] == "ok":
                c_crit = info["c_beta_crit"]
                peak_val = values[np.argmin(np.abs(grid - c_crit))]
                ax.plot([c_crit], [peak_val], "o", color=color, ms=4,
                        mec="black", mew=0.4)
        ax.set_xscale("log")
        ax.set_xlabel(r"$c_\beta$")
        ax.set_ylabel(r"$C_H$")
        ax.set_title("Heat capacity vs inverse-temperature scaling")
        _save(fig, out_path)


def render_fitness(run_dir: Path, out_path: Path) -> None:
    """Max-fitness trajectories, one line per replicate, baseline at 2."""
    logs = load_generation_logs(run_dir)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        cmap = plt.get_cmap("tab10")
        for i, (name, docs) in enumerate(sorted(logs.items())):
            gens = [d["generation"] for d in docs]
            ax.plot(gens, [d["max_fitness"] for d in docs],
                    color=cmap(i % 10), label=name)
            ax.plot(gens, [d["mean_fitness"] for d in docs],
                    color=cmap(i % 10), alpha=0.35, lw=0.8)
        ax.axhline(2.0, color="black", ls="--", lw=1.0, label="fitness = 2")
        ax.set_xlabel("generation")
        ax.set_ylabel("fitness")
        ax.set_title("Best (solid) and mean (faint) fitness per generation")
        ax.legend(fontsize=7)
        _save(fig, out_path)


def render_delta(run_dir: Path, out_path: Path) -> None:
    """Mean-delta trajectories colored by each replicate's final fitness."""
    logs = load_generation_logs(run_dir)
    trajectories = []
    for name, docs in sorted(logs.items()):
        pts = [(d["generation"], d["mean_delta"]) for d in docs
               if d.get("mean_delta") is not None]
        if pts:
            trajectories.append((name, np.asarray(pts, float),
                                 float(docs[-1]["max_fitness"])))
    if not trajectories:
        raise ValueError(f"{run_dir}: no mean_delta measurements in logs")
    finals = [t[2] for t in trajectories]
    lo, hi = min(finals), max(finals)
    span = (hi - lo) or 1.0
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        cmap = plt.get_cmap("plasma")
        for name, pts, final in trajectories:
            ax.plot(pts[:, 0], pts[:, 1], color=cmap((final - lo) / span),
                    marker="o", ms=2.5)
        ax.axhline(0.0, color="black", ls=":", lw=0.8)
        sm = plt.cm.ScalarMappable(
            cmap=cmap, norm=plt.Normalize(vmin=lo, vmax=hi))
        fig.colorbar(sm, ax=ax, label="final best fitness")
        ax.set_xlabel("generation")
        ax.set_ylabel(r"mean $\delta$")
        ax.set_title("Distance to criticality during evolution")
        _save(fig, out_path)


def render_generalize(run_dir: Path, out_path: Path) -> None:
    """Gamma vs extended-horizon fitness, marked by cluster."""
    rows = load_generalize(run_dir)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        markers = {"stable": "o", "overfit": "x"}
        for cluster in sorted({r["cluster"] for r in rows}):
            sub = [r for r in rows if r["cluster"] == cluster]
            ax.scatter([r["fitness_extend"] for r in sub],
                       [r["gamma"] for r in sub],
                       marker=markers.get(cluster, "s"), s=36,
                       label=f"cluster: {cluster}")
        ax.axhline(1.0, color="black", ls="--", lw=0.8, label=r"$\gamma = 1$")
        ax.set_xlabel("fitness over extended lifetime")
        ax.set_ylabel(r"$\gamma$")
        ax.set_title("Generalizability to longer lifetimes")
        ax.legend(fontsize=7)
        _save(fig, out_path)


def render_perturb(run_dir: Path, out_path: Path) -> None:
    """Perturbation decay: per-seed samples, means, fitted exponential."""
    samples, fit = load_perturbation(run_dir)
    f_grid = np.asarray(fit["f_grid"], dtype=float)
    mean_fitness = np.asarray(fit["mean_fitness"], dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.scatter([s[0] for s in samples], [s[2] for s in samples],
                   s=10, color="#4c72b0", alpha=0.5, label="per-seed mean")
        ax.plot(f_grid, mean_fitness, "o-", color="#dd8452",
                label="mean over seeds")
        if fit.get("fit_ok"):
            alpha, amp = fit["alpha"], fit["amplitude"]
            dense = np.linspace(f_grid.min(), f_grid.max(), 200)
            ax.plot(dense, amp * np.exp(alpha * dense), color="black",
                    lw=1.0, label=rf"$A e^{{\alpha f}}$, $\alpha$ = {alpha:.3g}")
        ax.set_xlabel("perturbed weight fraction f")
        ax.set_ylabel("mean fitness")
        ax.set_title("Fitness under genotype perturbation")
        ax.legend(fontsize=7)
        _save(fig, out_path)


def render_operators(run_dir: Path, out_path: Path) -> None:
    """Offspring-fitness histograms split by variation operator."""
    hist, meta = load_operators(run_dir)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for tag in sorted(hist):
            rows = sorted(hist[tag])
            lefts = np.array([r[0] for r in rows])
            rights = np.array([r[1] for r in rows])
            counts = np.array([r[2] for r in rows], dtype=float)
            centers = 0.5 * (lefts + rights)
            total = counts.sum() or 1.0
            ax.step(centers, counts / total, where="mid",
                    color=_TAG_COLORS.get(tag, "gray"),
                    label=f"{tag} (n={meta['totals'].get(tag, int(total))})")
        ax.set_xlabel("offspring fitness")
        ax.set_ylabel("fraction of offspring")
        ax.set_title(
            f"Operator outcomes, generations "
            f"{meta['gen_lo']}..{meta['gen_hi']}")
        ax.legend(fontsize=7)
        _save(fig, out_path)


RENDERERS = {
    "heatcap": render_heatcap,
    "fitness": render_fitness,
    "delta": render_delta,
    "generalize": render_generalize,
    "perturb": render_perturb,
    "operators": render_operators,
}
