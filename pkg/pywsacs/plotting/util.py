from __future__ import annotations

import logging
import pathlib
from typing import List

from ..util.tools import AnyPath, full_path
from .plot import SweepGraph

logger = logging.getLogger(__name__)


def write_figures(
    graph: SweepGraph,
    directory: AnyPath,
    stem: str,
    *,
    svg: bool = False,
    html: bool = False,
) -> List[pathlib.Path]:
    """
    Write ``graph`` with each requested backend.

    Backends are imported on demand, so matplotlib and bokeh are only
    needed when their format is requested.
    """
    directory = full_path(directory)
    written = []
    if svg:
        from .mpl import save_svg

        written.append(save_svg(graph, directory / f"{stem}.svg"))
    if html:
        from .bokeh import save_html

        written.append(save_html(graph, directory / f"{stem}.html"))
    return written
