"""
SVG figures for the scan and transport reports.

Each plotted series carries the gid "series-<index>", so the SVG holds one
identifiable group per series. The hash salt is fixed and the date metadata
dropped, which makes the output byte-stable across runs.
"""

import logging
from typing import Optional, Sequence, Tuple

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-16
SVG_STYLE = {
    'svg.hashsalt': 'ranklab',
    'svg.fonttype': 'none',
    'figure.figsize': (8, 5),
    'axes.grid': True,
    'grid.alpha': 0.3,
}

Series = Tuple[str, Sequence[float], Sequence[float]]


def loglog_svg(path: str, series: Sequence[Series], xlabel: str, ylabel: str, title: str,
               bands: Optional[Sequence[Tuple[Sequence[float], Sequence[float]]]] = None) -> str:
    """
    Log-log line plot written as SVG

    Args:
        path (str): Target file
        series (Sequence[Series]): (label, x, y) per series; y is floored at 1e-16
        xlabel (str): Horizontal axis label
        ylabel (str): Vertical axis label
        title (str): Figure title
        bands (Optional[Sequence]): (lower, upper) per series, drawn as shaded bands

    Returns:
        str: The path written
    """
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots()
        for index, (label, x, y) in enumerate(series):
            x = np.asarray(x, dtype=float)
            y = np.maximum(np.asarray(y, dtype=float), LOG_FLOOR)
            line, = ax.loglog(x, y, 'o-', linewidth=1.5, markersize=4, label=label)
            line.set_gid(f"series-{index}")
            if bands is not None:
                lower, upper = (np.maximum(np.asarray(b, dtype=float), LOG_FLOOR) for b in bands[index])
                band = ax.fill_between(x, lower, upper, alpha=0.2, color=line.get_color())
                band.set_gid(f"band-{index}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend(fontsize=9, framealpha=0.9)
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)
    logger.info(f"Figure saved: {path}")
    return path


def fitted_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Least-squares slope of log y against log x over the positive points; nan if fewer than two
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0) & np.isfinite(y)
    if mask.sum() < 2:
        return float('nan')
    slope, _ = np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)
    return float(slope)
