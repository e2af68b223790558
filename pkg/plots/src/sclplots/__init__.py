"""Figures from sclnoise CSV artifacts.

This package only reads the CSV files written by the `sclnoise` command
line tool; it never recomputes any quantity and never imports the solver
package.
"""

__version__ = "0.1.0"

from .render import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]
