"""Figure rendering for simulator CSV outputs.

Consumes only the simulator's documented file formats (frames.csv,
queues.csv, summary.txt, sweep.csv); no simulation logic lives here.
"""

from .render import FIGURE_KINDS, FigureError, FigureSpec, render

__all__ = ["FIGURE_KINDS", "FigureError", "FigureSpec", "render"]
