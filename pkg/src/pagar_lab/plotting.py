"""Figure rendering for the CLI report paths (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def line_chart(x, ys, labels, xlabel, ylabel, out_path, title=None,
               hlines=(), fmt="png"):
    """One or more labelled line series, optional dashed reference levels."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    for y, label in zip(ys, labels):
        ax.plot(x, y, label=label)
    for level, label in hlines:
        ax.axhline(level, linestyle="--", color="grey", linewidth=0.9)
        ax.annotate(label, (x[0], level), fontsize=7,
                    textcoords="offset points", xytext=(2, 3), color="grey")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    if labels and any(labels):
        ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path).with_suffix("." + fmt)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
