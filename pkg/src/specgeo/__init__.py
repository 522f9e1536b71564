"""Numerical spectral geometry on flat tori, the noncommutative torus and the Moyal plane."""

__version__ = "0.1.0"
