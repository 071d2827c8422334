"""Static figures written next to a run's CSV output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .trajectory import Trajectory  # noqa: E402


def figure_paths(csv_path) -> tuple[Path, Path]:
    p = Path(csv_path)
    return p.with_name(p.stem + "_timeseries.png"), p.with_name(p.stem + "_phase.png")


def plot_run(traj: Trajectory, csv_path, x_star: float | None = None,
             stride: float | None = 0.1, title: str = "") -> list[Path]:
    """Time series of x and y, and the (x, y) phase portrait.

    Returns the paths written.
    """
    ts, xs, ys = traj.sample(stride)
    ts_path, ph_path = figure_paths(csv_path)

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(ts, xs, lw=1.0, label="x (resting)")
    ax.plot(ts, ys, lw=1.0, label="y (proliferating)")
    if x_star is not None:
        ax.axhline(x_star, color="k", ls=":", lw=0.8, label="x*")
    ax.set_xlabel("t (days)")
    ax.set_ylabel("cells")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(ts_path, dpi=120, metadata={"Software": None})
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(xs, ys, lw=0.7)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(ph_path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return [ts_path, ph_path]
