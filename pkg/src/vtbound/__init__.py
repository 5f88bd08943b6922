"""Bounded systematic and randomized exploration of thread interleavings."""

__version__ = "0.1.0"
