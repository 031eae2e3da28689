"""Stochastic set-valued optimization toolkit."""

__version__ = "0.1.0"
