"""Spectral sets, boundary indicators and Galerkin checks for rotating stratified fluids."""

__version__ = "0.1.0"
