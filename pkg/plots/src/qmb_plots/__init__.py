"""Render figure images from qmb sweep CSV tables (no physics recomputed)."""

__version__ = "0.1.0"

from .render import FigureSpec, read_table, render

__all__ = ["FigureSpec", "read_table", "render", "__version__"]
