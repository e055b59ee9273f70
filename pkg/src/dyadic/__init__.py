"""Dyadic fractal supports, lacunary wavelet series and their multifractal analysis."""

__version__ = "0.1.0"
