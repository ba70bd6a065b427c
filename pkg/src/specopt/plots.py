"""Figure rendering for experiment reports.

Every report command writes its figures next to the CSV output; the CSVs
stay the canonical record and the figures are rendered views of the same
rows. Uses the non-interactive Agg backend so runs work headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

VARIANT_COLORS = {
    "task_only": "tab:blue",
    "spec_only": "tab:orange",
    "joint": "tab:green",
    "joint_filtered": "tab:red",
}


def _style(ax, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)


def save_figure(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_loss_curves(reports, path) -> None:
    """Task and joint loss vs step, one line per (variant, seed)."""
    fig, (ax_task, ax_joint) = plt.subplots(1, 2, figsize=(11, 4.2))
    seen = set()
    for report in reports:
        steps = [r.step for r in report.trace.records]
        color = VARIANT_COLORS.get(report.variant, "gray")
        label = report.variant if report.variant not in seen else None
        seen.add(report.variant)
        ax_task.plot(steps, [r.task_loss for r in report.trace.records],
                     color=color, alpha=0.55, lw=1.2, label=label)
        ax_joint.plot(steps, [r.joint_loss for r in report.trace.records],
                      color=color, alpha=0.55, lw=1.2)
    for ax, name in ((ax_task, "task loss"), (ax_joint, "joint loss")):
        _style(ax, "step", name, f"{name} per variant")
        ax.set_yscale("log")
    ax_task.legend(fontsize=8)
    save_figure(fig, path)


def plot_sweep(rows, axis_name, path) -> None:
    """Median final task loss vs swept value per variant, seeds as dots."""
    fig, ax = plt.subplots(figsize=(6.2, 4.4))
    by_variant: dict = {}
    for value, variant, _seed, final_task_loss, _steps in rows:
        by_variant.setdefault(variant, {}).setdefault(value, []).append(final_task_loss)
    for variant, groups in by_variant.items():
        values = sorted(groups)
        color = VARIANT_COLORS.get(variant, "gray")
        medians = [float(np.median(groups[v])) for v in values]
        for v in values:
            ax.plot([v] * len(groups[v]), groups[v], ".", color=color, alpha=0.35, ms=4)
        ax.plot(values, medians, "o-", color=color, label=variant)
    _style(ax, axis_name, "final task loss", f"final task loss vs {axis_name}")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    save_figure(fig, path)


def plot_denoise(rows, path) -> None:
    """Filtered vs unfiltered reconstruction MSE; points below the diagonal
    are seeds where filtering helped."""
    fig, ax = plt.subplots(figsize=(5.2, 4.8))
    noise_levels = sorted({r[1] for r in rows})
    cmap = plt.get_cmap("viridis")
    for i, level in enumerate(noise_levels):
        pts = [(r[2], r[3]) for r in rows if r[1] == level]
        xs, ys = zip(*pts)
        ax.plot(xs, ys, "o", ms=4, alpha=0.6,
                color=cmap(i / max(len(noise_levels) - 1, 1)),
                label=f"noise sd {level:g}")
    lim = max(max(r[2] for r in rows), max(r[3] for r in rows)) * 1.1
    lim = max(lim, 1e-12)
    ax.plot([0, lim], [0, lim], "k--", lw=1, label="no change")
    ax.set_xlim(0, lim)
    ax.set_ylim(0, lim)
    _style(ax, "MSE unfiltered", "MSE filtered", "gradient-field denoising")
    ax.legend(fontsize=8)
    save_figure(fig, path)
