"""Grouped boxplot rendering for gridfreq benchmark CSVs."""

from .render import (
    BoxCell,
    FigureSpec,
    box_statistics,
    build_figure,
    compute_boxes,
    default_zoom_limits,
    load_records,
    load_summary,
    render_grouped_boxplot,
    verify_against_summary,
)

__version__ = "0.1.0"

__all__ = [
    "BoxCell",
    "FigureSpec",
    "box_statistics",
    "build_figure",
    "compute_boxes",
    "default_zoom_limits",
    "load_records",
    "load_summary",
    "render_grouped_boxplot",
    "verify_against_summary",
]
