from .plot import PlotCurveLine, SweepGraph, curve_from_sweep, sweep_graph
from .util import write_figures

__all__ = [
    "PlotCurveLine",
    "SweepGraph",
    "curve_from_sweep",
    "sweep_graph",
    "write_figures",
]
