"""Compute-and-forward for the multiple-access relay channel."""

__version__ = "0.1.0"
