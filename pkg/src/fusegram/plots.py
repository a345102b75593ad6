"""Figure rendering for the CLI report path.

Produces the two report figures next to the delimited output: accuracy
error bars per kernel version, and a 2x2 confusion-matrix heatmap.  PNG
date metadata is suppressed so artifacts are byte-reproducible.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Date": None}


def save_errorbar_figure(reports, path, title="Kernel accuracy") -> None:
    """Mean accuracy with +-1 standard-error bars, one point per spec."""
    tags = [r.spec_tag for r in reports]
    means = [r.mean_accuracy for r in reports]
    errs = [r.stderr_accuracy for r in reports]
    width = max(6.0, 0.45 * len(tags))
    fig, ax = plt.subplots(figsize=(width, 4.2))
    x = np.arange(len(tags))
    ax.errorbar(x, means, yerr=errs, fmt="o", capsize=3, markersize=4)
    ax.set_xticks(x)
    ax.set_xticklabels(tags, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("accuracy (mean +- stderr)")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def save_confusion_figure(cm, path, class_names=None, title=None) -> None:
    """2x2 heatmap, rows = actual, columns = predicted, positive first."""
    counts = np.array([[cm.tp, cm.fn], [cm.fp, cm.tn]], dtype=float)
    if class_names is None:
        pos = str(cm.positive_class)
        class_names = (pos, f"not {pos}")
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    ax.imshow(counts, cmap="Blues")
    for (r, c), value in np.ndenumerate(counts):
        color = "white" if value > counts.max() / 2 else "black"
        ax.text(c, r, f"{int(value)}", ha="center", va="center",
                color=color)
    ax.set_xticks([0, 1], class_names)
    ax.set_yticks([0, 1], class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("actual")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def save_pareto_figure(ratios, path, threshold=None) -> None:
    """Per-component explained variance bars with the cumulative curve."""
    ratios = np.asarray(ratios, dtype=float)
    x = np.arange(1, ratios.size + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x, ratios, alpha=0.7, label="per component")
    ax.plot(x, np.cumsum(ratios), "o-", color="tab:orange", markersize=3,
            label="cumulative")
    if threshold is not None:
        ax.axhline(threshold, color="gray", linestyle="--", linewidth=1)
    ax.set_xlabel("principal component")
    ax.set_ylabel("explained variance ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
