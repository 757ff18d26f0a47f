"""Handwritten Arabic character and digit recognition, implemented from scratch."""

__version__ = "0.1.0"
