"""Entropy coding toolkit for non-rectangular transform blocks."""

__version__ = "0.1.0"
