"""Matplotlib rendering of prediction heatmaps and training curves to files."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_prediction_figure(path, truth: np.ndarray, prediction: np.ndarray,
                           title: str = "") -> Path:
    """Side-by-side heatmaps of truth, prediction, and absolute error."""
    truth = np.asarray(truth, dtype=np.float64)
    prediction = np.asarray(prediction, dtype=np.float64)
    if truth.shape != prediction.shape or truth.ndim != 2:
        raise ValueError("truth and prediction must be matching 2-D fields")
    error = np.abs(prediction - truth)
    vmin, vmax = truth.min(), truth.max()
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), constrained_layout=True)
    panels = [("truth", truth, vmin, vmax), ("prediction", prediction, vmin, vmax),
              ("absolute error", error, 0.0, max(error.max(), 1e-30))]
    for ax, (label, field, lo, hi) in zip(axes, panels):
        im = ax.imshow(field, origin="lower", vmin=lo, vmax=hi, cmap="viridis")
        ax.set_title(label)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        fig.suptitle(title)
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_training_curves(path, history: list[dict], title: str = "") -> Path:
    """Relative L2 and learning rate across epochs, on log scales."""
    if not history:
        raise ValueError("history is empty")
    epochs = [row["epoch"] for row in history]
    train = [row["train_rel_l2"] for row in history]
    test = [row["test_rel_l2"] for row in history]
    lrs = [row["lr"] for row in history]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6), constrained_layout=True)
    ax1.semilogy(epochs, train, label="train")
    ax1.semilogy(epochs, test, label="test")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("relative L2")
    ax1.legend()
    ax1.grid(True, which="both", alpha=0.3)
    ax2.semilogy(epochs, lrs)
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("learning rate")
    ax2.grid(True, which="both", alpha=0.3)
    if title:
        fig.suptitle(title)
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_ablation_figure(path, rows: list[dict], title: str = "") -> Path:
    """Parameter count versus relative L2 for a family of model variants."""
    if not rows:
        raise ValueError("no ablation rows to plot")
    fig, ax = plt.subplots(figsize=(6.4, 4.2), constrained_layout=True)
    params = [row["params"] / 1e6 for row in rows]
    labels = [row["model"] for row in rows]
    errors = [row.get("rel_l2") for row in rows]
    if any(e is not None for e in errors):
        ax.plot(params, [e if e is not None else float("nan") for e in errors],
                marker="o")
        ax.set_ylabel("relative L2")
    else:
        ax.bar(range(len(params)), params)
        ax.set_xticks(range(len(labels)))
        ax.set_ylabel("parameters (millions)")
    ax.set_xlabel("model" if errors and all(e is None for e in errors)
                  else "parameters (millions)")
    if all(e is None for e in errors):
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.grid(True, alpha=0.3)
    if title:
        fig.suptitle(title)
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
