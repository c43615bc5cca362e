"""Fundamental groups of plane curve complements and saddle-leaf geometry."""

__version__ = "0.1.0"
