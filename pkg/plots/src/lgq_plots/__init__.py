"""Figure rendering for the lgq CSV outputs."""

from .figures import FigureSpec, plot_ellipses, plot_heatmap
from .io import InputError

__all__ = ["FigureSpec", "InputError", "plot_ellipses", "plot_heatmap"]
