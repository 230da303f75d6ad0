"""Spectral densities of heavy-tailed random matrices, with Monte Carlo checks."""

__version__ = "0.1.0"
