"""Figures for the CLI. Only imported when ``--figures`` is given."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _ecdf(ax, plot):
    ax.plot(plot["x"], plot["empirical"], label="empirical")
    ax.plot(plot["x"], plot["model"], "--", label="model")
    ax.set_xlabel("depth")
    ax.set_ylabel("CDF")


def _hist(ax, plot):
    left, right = np.asarray(plot["left"]), np.asarray(plot["right"])
    ax.bar(left, plot["empirical"], width=right - left, align="edge", alpha=0.5, label="empirical")
    mid = 0.5 * (left + right)
    ax.plot(mid, plot["model"], "o-", label="model")
    if "displayed_series" in plot:
        ax.plot(mid, plot["displayed_series"], "x:", label="displayed series")
    ax.set_ylabel("bin mass")


def _qq(ax, plot):
    for key in plot:
        if key.startswith("direct_"):
            name = key[len("direct_"):]
            a, b = np.asarray(plot[key]), np.asarray(plot["constructed_" + name])
            scale = np.nanmax(np.abs(a)) or 1.0
            ax.plot(a / scale, b / scale, ".", label=name)
    ax.plot([0, 1], [0, 1], "k-", lw=0.5)
    ax.set_xlabel("direct quantile (scaled)")
    ax.set_ylabel("constructed quantile (scaled)")


_DRAW = {"ecdf": _ecdf, "hist": _hist, "qq": _qq}


def render(plot: dict, outdir, stem: str) -> Path:
    """Draw one figure from the plot-data dict and save it as PNG."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5, 4))
    _DRAW[plot["kind"]](ax, plot)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / f"{stem}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
