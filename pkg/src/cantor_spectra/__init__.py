"""Spectra and maximal orthogonal exponential families of the quarter Cantor measure."""

__version__ = "0.1.0"
