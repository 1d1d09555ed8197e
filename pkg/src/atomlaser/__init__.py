"""Stability analysis and simulation of a pumped atom laser in the complex Ginzburg-Landau picture."""

__version__ = "0.1.0"
