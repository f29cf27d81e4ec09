"""Batch renderer for kvlink experiment CSVs."""

from .figures import FIGURE_CLASSES, FigureRequest, SchemaError, render

__all__ = ["FIGURE_CLASSES", "FigureRequest", "SchemaError", "render"]

__version__ = "0.1.0"
