from __future__ import annotations

import logging
import pathlib
from typing import Optional

import bokeh.embed
import bokeh.models
import bokeh.resources
from bokeh.plotting import figure

from ..util.tools import AnyPath, full_path
from .plot import PlotCurveLine, SweepGraph

logger = logging.getLogger(__name__)


class _Defaults:
    """
    Defaults used for Bokeh plots internally.

    To change these values, use `set_defaults`.
    """

    width: int = 600
    height: int = 400
    tools: str = "pan,wheel_zoom,box_zoom,reset,hover,crosshair"


def set_defaults(
    width: Optional[int] = None,
    height: Optional[int] = None,
    tools: Optional[str] = None,
):
    if width is not None:
        _Defaults.width = int(width)
    if height is not None:
        _Defaults.height = int(height)
    if tools is not None:
        _Defaults.tools = tools


def _plot_curve(fig: figure, curve: PlotCurveLine) -> None:
    source = bokeh.models.ColumnDataSource(data={"x": curve.xs, "y": curve.ys})
    kwargs = {"legend_label": curve.label} if curve.label else {}
    fig.line(
        "x",
        "y",
        source=source,
        line_width=curve.linewidth,
        line_color=curve.color,
        line_dash=curve.linestyle,
        **kwargs,
    )


def create_figure(graph: SweepGraph, *, tools: Optional[str] = None) -> figure:
    fig = figure(
        title=graph.title,
        x_axis_label=graph.xlabel,
        y_axis_label=graph.ylabel,
        tools=tools or _Defaults.tools,
        width=_Defaults.width,
        height=_Defaults.height,
    )
    for curve in graph.curves:
        _plot_curve(fig, curve)
    if not graph.draw_grid:
        fig.grid.visible = False
    if graph.draw_legend and any(curve.label for curve in graph.curves):
        fig.legend.location = "top_right"
        fig.legend.click_policy = "hide"
    return fig


def save_html(graph: SweepGraph, path: AnyPath) -> pathlib.Path:
    """Write ``graph`` as a standalone HTML page (BokehJS from the CDN)."""
    path = full_path(path)
    fig = create_figure(graph)
    html = bokeh.embed.file_html(fig, resources=bokeh.resources.CDN, title=graph.title)
    path.write_text(html, encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
