from __future__ import annotations

import logging
import pathlib
from typing import Optional, Tuple

import matplotlib
import matplotlib.axes
import matplotlib.figure

from ..util.tools import AnyPath, full_path
from .plot import PlotCurveLine, SweepGraph

logger = logging.getLogger(__name__)

# Fixed so repeated runs produce identical SVG element ids.
SVG_HASHSALT = "pywsacs"


class _Defaults:
    figsize: Tuple[float, float] = (6.4, 4.0)
    dpi: int = 100


def set_defaults(
    figsize: Optional[Tuple[float, float]] = None,
    width: Optional[float] = None,
    height: Optional[float] = None,
    dpi: Optional[int] = None,
):
    if figsize is not None:
        _Defaults.figsize = figsize
    if width and height:
        _Defaults.figsize = (width, height)
    if dpi is not None:
        _Defaults.dpi = dpi


def plot_curve_line(curve: PlotCurveLine, ax: matplotlib.axes.Axes):
    return ax.plot(
        curve.xs,
        curve.ys,
        color=curve.color,
        linestyle=curve.linestyle,
        linewidth=curve.linewidth,
        label=curve.label or None,
    )


def plot_graph(graph: SweepGraph, ax: matplotlib.axes.Axes) -> matplotlib.axes.Axes:
    """Draw ``graph`` onto existing axes."""
    for curve in graph.curves:
        plot_curve_line(curve, ax)
    ax.set_title(graph.title)
    ax.set_xlabel(graph.xlabel)
    ax.set_ylabel(graph.ylabel)
    if graph.draw_grid:
        ax.grid(True, linewidth=0.5, alpha=0.5)
    if graph.draw_legend and any(curve.label for curve in graph.curves):
        ax.legend(fontsize=8)
    return ax


def create_figure(graph: SweepGraph) -> matplotlib.figure.Figure:
    # A bare Figure avoids pyplot's global state and any GUI backend.
    fig = matplotlib.figure.Figure(figsize=_Defaults.figsize, dpi=_Defaults.dpi)
    ax = fig.add_subplot()
    plot_graph(graph, ax)
    fig.tight_layout()
    return fig


def save_svg(graph: SweepGraph, path: AnyPath) -> pathlib.Path:
    """
    Write ``graph`` as an SVG file.

    The output carries no timestamp and uses a fixed hash salt, so it is
    identical across runs with the same data.
    """
    path = full_path(path)
    fig = create_figure(graph)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.info("Wrote %s", path)
    return path
