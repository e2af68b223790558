"""Numerical laboratory for well-posedness by noise in scalar conservation laws."""

__version__ = "0.1.0"
