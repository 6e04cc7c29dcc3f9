"""Numerical tools for growth and periodic points of entire functions."""

__version__ = "0.1.0"
