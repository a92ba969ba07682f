"""
Quick-look SVG plots rendered with matplotlib (Agg backend). CSV stays the
canonical output; these are only for eyeballing a run.
"""

import io
import math
from pathlib import Path
from typing import Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .io import PathLike, atomic_write_text  # noqa: E402

Series = Tuple[Sequence[float], Sequence[float]]

# text stays text and ids are salted so reruns give identical files
STYLE = {
    "svg.fonttype": "none",
    "svg.hashsalt": "qjh",
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path: PathLike) -> Path:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return atomic_write_text(path, buf.getvalue())


def line_plot(
    path: PathLike,
    series: Sequence[Series],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    log_y: bool = False,
) -> Path:
    """One line per (x, y) series; non-positive values are dropped on a log axis"""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for xs, ys in series:
            pts = [(float(x), float(y)) for x, y in zip(xs, ys) if math.isfinite(float(y))]
            if log_y:
                pts = [(x, y) for x, y in pts if y > 0]
            if pts:
                ax.plot(*zip(*pts), linewidth=1.2)
        if log_y:
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        return _save(fig, path)


def histogram_plot(
    path: PathLike,
    edges: Sequence[float],
    density: Sequence[float],
    title: str = "",
    x_label: str = "",
    reference: Optional[Series] = None,
) -> Path:
    """Bars for a density histogram with an optional reference curve"""
    edges = [float(e) for e in edges]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.stairs([float(d) for d in density], edges, fill=True, alpha=0.6)
        if reference is not None:
            ax.plot([float(x) for x in reference[0]], [float(y) for y in reference[1]], "k-", linewidth=1.2)
        ax.set_xlim(edges[0], edges[-1])
        ax.set_title(title)
        ax.set_xlabel(x_label)
        ax.set_ylabel("density")
        return _save(fig, path)
