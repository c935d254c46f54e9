"""Headless figure renderer for the reconciliation simulator's CSV tables."""

from .figures import FIGURE_IDS, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FIGURE_IDS", "SchemaError", "render", "__version__"]
