"""Differentiable teaching games over parametric concept families."""

__version__ = "0.1.0"
