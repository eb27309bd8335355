"""Backend-independent description of sweep figures."""

from __future__ import annotations

import logging
import math
from typing import ClassVar, Dict, List, Optional

import pydantic
import pydantic.dataclasses as dataclasses

from ..asymptotic import SweepResult

logger = logging.getLogger(__name__)

_dcls_config = pydantic.ConfigDict()

# Matplotlib "tab10", in order.
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)

AXIS_LABELS = {
    "n": "n",
    "phi": "normalized sampling phase",
    "D": "D",
}


@dataclasses.dataclass(config=_dcls_config)
class PlotCurveLine:
    xs: List[float]
    ys: List[float]
    color: str = "black"
    linestyle: str = "solid"
    linewidth: float = 1.0
    label: str = ""

    @property
    def num_points(self) -> int:
        return len(self.xs)


@dataclasses.dataclass(config=_dcls_config)
class SweepGraph:
    """
    One figure: rate against the sweep axis, a line per curve.

    Attributes
    ----------
    axis : {"n", "phi", "D"}
    curves : list of PlotCurveLine
    title : str
    xlabel : str
    ylabel : str
    """

    graph_type: ClassVar[str] = "sweep"
    axis: str
    curves: List[PlotCurveLine] = pydantic.Field(default_factory=list)
    title: str = ""
    xlabel: str = ""
    ylabel: str = "R [bits/sample]"
    draw_grid: bool = True
    draw_legend: bool = True


def curve_from_sweep(result: SweepResult, label: str, color: str) -> PlotCurveLine:
    """
    Polyline of the successful points of ``result``.

    Failed points are dropped; the line joins the remaining ones.
    """
    xs, ys = [], []
    for point in result.points:
        if point.R is None or not math.isfinite(point.R):
            continue
        xs.append(point.axis_value)
        ys.append(point.R)
    if len(xs) < len(result.points):
        logger.debug("Curve %r: %d failed points omitted", label, len(result.points) - len(xs))
    return PlotCurveLine(xs=xs, ys=ys, color=color, label=label)


def sweep_graph(results: Dict[str, SweepResult], title: Optional[str] = None) -> SweepGraph:
    """
    Build a figure from labeled sweep results sharing one axis.

    Parameters
    ----------
    results : dict of str to SweepResult
        Curve label to sweep, in legend order.
    title : str, optional

    Returns
    -------
    SweepGraph
    """
    if not results:
        raise ValueError("At least one sweep is required")
    axes = {result.axis for result in results.values()}
    if len(axes) != 1:
        raise ValueError(f"Sweeps must share one axis, got {sorted(axes)}")
    (axis,) = axes
    curves = [
        curve_from_sweep(result, label, PALETTE[idx % len(PALETTE)])
        for idx, (label, result) in enumerate(results.items())
    ]
    return SweepGraph(
        axis=axis,
        curves=curves,
        title=title or f"R versus {AXIS_LABELS[axis]}",
        xlabel=AXIS_LABELS[axis],
    )
