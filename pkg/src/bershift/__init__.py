"""Numerical criterion checking for nonsingular Bernoulli shifts."""

__version__ = "0.1.0"
