"""Display-only rendering of simulation report CSVs."""

from .render import FIGURE_KINDS, PlotJob, render

__all__ = ["FIGURE_KINDS", "PlotJob", "render"]
