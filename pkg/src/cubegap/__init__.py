"""Integrality-gap experiments for Max-2-LIN(Z2) on hypercube graphs."""

__version__ = "0.1.0"
