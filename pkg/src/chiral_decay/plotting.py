"""Minimal SVG line plots for scenario outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# Fixed id salt and no timestamp keep repeated renders byte-identical.
_RC = {"svg.hashsalt": "chiral-decay", "svg.fonttype": "path", "figure.figsize": (6.0, 4.0)}


def line_plot(
    path: str | Path,
    x,
    series: Sequence[tuple[str, object]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    logy: bool = False,
    markers: bool = False,
) -> Path:
    """Write one SVG with a line per ``(label, y)`` pair."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for label, y in series:
            ax.plot(x, y, "o-" if markers else "-", label=label, markersize=3)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def scatter_plot(path: str | Path, x, y, xlabel: str, ylabel: str, title: str = "") -> Path:
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.scatter(x, y, s=12)
        ax.axhline(0.0, color="0.7", lw=0.5)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
