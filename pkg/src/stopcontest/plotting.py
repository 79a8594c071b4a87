"""Figure rendering for equilibrium CDFs and densities.

SVG output is made reproducible by pinning the hash salt and dropping the
date metadata, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "stopcontest"


def render_curves(curves, out_path, xlabel: str, ylabel: str, title: str = "",
                  ylim=None):
    """Render overlaid (label, x, y) curves to an SVG file."""
    if not curves:
        raise ValueError("nothing to plot")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, x, y in curves:
        ax.plot(x, y, lw=1.4, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if ylim is not None:
        ax.set_ylim(*ylim)
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path
