"""Plotting companion for the wideband reflecting-surface simulator."""

from .plots import (
    FIGURE_KINDS, LEGEND_ORDER, SCHEME_LABELS, FigureError, PlotSpec,
    aggregate_rates, build_figure, build_model_surface, load_rows,
    phase_line_residual, render, render_model_surface,
)

__version__ = "0.1.0"
