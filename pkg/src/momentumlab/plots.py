"""Figure rendering for report paths.

Every reproduction/report command renders PNG figures next to its CSV
artifacts.  Rendering is headless (Agg) and side-effect free apart from
the written file.
"""

from __future__ import annotations

import os
from typing import Dict, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_decay", "save_trajectory2d", "save_lyapunov", "save_panels"]

_DPI = 150


def _finish(fig, path: str) -> str:
    directory = os.path.dirname(os.fspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return os.fspath(path)


def save_decay(
    path,
    series: Dict[str, Tuple[np.ndarray, np.ndarray]],
    title: str = "",
    xlabel: str = "step n",
    ylabel: str = "f(x_n) - inf f",
    logy: bool = True,
) -> str:
    """Objective-gap decay curves, one labeled line per series."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (x, y) in series.items():
        y = np.asarray(y, dtype=float)
        if logy:
            # semilog plots drop nonpositive values; clip to the smallest positive double
            y = np.maximum(y, 5e-324)
        ax.plot(x, y, label=label, linewidth=1.4)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def save_trajectory2d(
    path,
    curves: Dict[str, np.ndarray],
    manifold: Optional[np.ndarray] = None,
    title: str = "",
) -> str:
    """Planar trajectories with an optional manifold overlay."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    if manifold is not None:
        ax.plot(manifold[:, 0], manifold[:, 1], color="black", linewidth=1.0,
                alpha=0.6, label="minimizers")
    for label, xy in curves.items():
        xy = np.asarray(xy, dtype=float)
        (line,) = ax.plot(xy[:, 0], xy[:, 1], linewidth=1.2, label=label)
        ax.plot(xy[0, 0], xy[0, 1], marker="o", markersize=4, color="gray")
        ax.plot(xy[-1, 0], xy[-1, 1], marker="*", markersize=9, color=line.get_color())
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal", adjustable="datalim")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def save_lyapunov(path, trace, title: str = "") -> str:
    """Certified energy trace against its contraction envelope."""
    values = np.asarray(trace.values, dtype=float)
    n = np.arange(values.size)
    targets = np.asarray(trace.contraction_target, dtype=float)
    envelope = np.empty_like(values)
    envelope[0] = values[0]
    for k in range(1, values.size):
        envelope[k] = targets[k - 1] * envelope[k - 1] + trace.per_step_noise[k - 1]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(n, np.maximum(values, 5e-324), label="energy", linewidth=1.4)
    ax.plot(n, np.maximum(envelope, 5e-324), label="allowed envelope",
            linestyle="--", linewidth=1.2)
    if trace.noise_floor > 0.0:
        ax.axhline(trace.noise_floor, color="gray", linestyle=":",
                   linewidth=1.0, label="noise floor")
    ax.set_yscale("log")
    ax.set_xlabel("step n")
    ax.set_ylabel("energy")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def save_panels(
    path,
    panels: Sequence[Tuple[str, Dict[str, Tuple[np.ndarray, np.ndarray]]]],
    ylabel: str = "f(x_n)",
) -> str:
    """Row of decay panels sharing the y-axis scale."""
    k = len(panels)
    fig, axes = plt.subplots(1, k, figsize=(4.0 * k, 3.4), sharey=True)
    if k == 1:
        axes = [axes]
    for ax, (title, series) in zip(axes, panels):
        for label, (x, y) in series.items():
            ax.plot(x, np.maximum(np.asarray(y, dtype=float), 5e-324),
                    label=label, linewidth=1.3)
        ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel("step n")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    axes[0].set_ylabel(ylabel)
    return _finish(fig, path)
