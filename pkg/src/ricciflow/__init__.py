"""Rotationally symmetric Ricci flow with cutoff surgery."""

__version__ = "0.1.0"
