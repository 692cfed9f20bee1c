"""Static SVG line plots with reproducible output."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def line_plot(path, series: dict, xlabel: str, ylabel: str, title: str = "", logx: bool = False, logy: bool = False, hlines=()):
    """``series`` maps a label to ``(xs, ys)``; ``hlines`` is a list of ``(y, label)``."""
    with plt.rc_context({"svg.hashsalt": "hbv", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, (xs, ys) in series.items():
            ax.plot(xs, ys, marker="o", ms=3, label=label)
        for y, label in hlines:
            ax.axhline(y, ls="--", lw=1, color="grey", label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if series or hlines:
            ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
