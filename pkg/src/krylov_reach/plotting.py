"""PNG figures of projected reachable sets and trajectories."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402


def plot_projection(path, polygons, dims, trajectories=None, initial=None, title: str | None = None) -> None:
    """Filled time-interval polygons, optional initial polygon and trajectories."""
    fig, ax = plt.subplots(figsize=(6, 5))
    pc = PolyCollection([np.asarray(P) for P in polygons], facecolor="0.75", edgecolor="0.55", linewidth=0.4)
    ax.add_collection(pc)
    if initial is not None:
        P = np.asarray(initial)
        ax.fill(P[:, 0], P[:, 1], facecolor="white", edgecolor="black", linewidth=0.8)
    for tr in trajectories or ():
        ax.plot(tr.states[:, dims[0]], tr.states[:, dims[1]], color="black", linewidth=0.5)
    ax.autoscale_view()
    ax.set_xlabel(f"x{dims[0]}")
    ax.set_ylabel(f"x{dims[1]}")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_bounds(path, t_lo, t_hi, lo, hi, coordinate: int, unsafe=None) -> None:
    """Interval hull of one coordinate over time as a band of boxes."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for a, b, l, h in zip(t_lo, t_hi, lo[:, coordinate], hi[:, coordinate]):
        ax.fill_between([a, b], [l, l], [h, h], color="0.7", linewidth=0)
    if unsafe is not None:
        ymin, ymax = ax.get_ylim()
        a, b = max(unsafe[0], ymin), min(unsafe[1], ymax)
        if a < b:
            ax.axhspan(a, b, color="tab:red", alpha=0.15)
        ax.set_ylim(ymin, ymax)
    ax.set_xlabel("t")
    ax.set_ylabel(f"x{coordinate}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
