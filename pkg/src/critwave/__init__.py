"""Numerical laboratory for the radial energy-critical focusing wave equation (N=3)."""

__version__ = "0.1.0"
