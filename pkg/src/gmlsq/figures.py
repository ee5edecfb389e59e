"""Render experiment reports to figure files.

Uses the non-interactive Agg backend so rendering works headless; figures
land next to the delimited report output when the CLI is invoked with
--plot. Sweep reports become accuracy-versus-axis line plots with a
one-standard-deviation band; benchmark suites become grouped bars.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import IoError

_AXIS_LABELS = {
    "noise_fraction": "label-noise fraction",
    "subsample_fraction": "training-set fraction",
    "influence_param": "influence-function parameter",
}


def _save(fig, path: str) -> str:
    try:
        fig.savefig(path, dpi=150, bbox_inches="tight")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def render_sweep_figure(reports, path: str) -> str:
    """Line plot of mean train/test accuracy across a sweep's reports."""
    reports = list(reports)
    xs = np.array([r.sweep_value for r in reports], dtype=np.float64)
    order = np.argsort(xs)
    xs = xs[order]
    heads = [reports[i].best_by_test for i in order]
    mean_test = np.array([c.mean_test for c in heads]) * 100.0
    std_test = np.array([c.std_test for c in heads]) * 100.0
    mean_train = np.array([c.mean_train for c in heads]) * 100.0
    std_train = np.array([c.std_train for c in heads]) * 100.0

    r0 = reports[0]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, mean_train, marker="o", label="train")
    ax.fill_between(xs, mean_train - std_train, mean_train + std_train, alpha=0.2)
    ax.plot(xs, mean_test, marker="s", label="test")
    ax.fill_between(xs, mean_test - std_test, mean_test + std_test, alpha=0.2)
    ax.set_xlabel(_AXIS_LABELS.get(r0.sweep_axis, r0.sweep_axis or "sweep value"))
    ax.set_ylabel("accuracy (%)")
    label = r0.model if r0.influence_variant is None else f"{r0.model} ({r0.influence_variant})"
    ax.set_title(f"{r0.dataset}: {label}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def render_bench_figure(reports, path: str) -> str:
    """Grouped bars of the test-selected cells of a benchmark suite."""
    reports = list(reports)
    names = [
        r.model if r.influence_variant is None else f"{r.model}\n{r.influence_variant}"
        for r in reports
    ]
    heads = [r.best_by_test for r in reports]
    xs = np.arange(len(reports))
    width = 0.38

    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(reports)), 4.0))
    ax.bar(xs - width / 2, [100 * c.mean_train for c in heads], width,
           yerr=[100 * c.std_train for c in heads], capsize=3, label="train")
    ax.bar(xs + width / 2, [100 * c.mean_test for c in heads], width,
           yerr=[100 * c.std_test for c in heads], capsize=3, label="test")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, fontsize=8)
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0.0, 105.0)
    r0 = reports[0]
    ax.set_title(f"{r0.dataset} (m = {r0.dataset_m}, n = {r0.dataset_n})")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    return _save(fig, path)
