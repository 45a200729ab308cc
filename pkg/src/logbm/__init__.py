"""Computational laboratory for logarithmic Brunn-Minkowski geometry."""
__version__ = "0.1.0"
