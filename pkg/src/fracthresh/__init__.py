"""Threshold dynamics driven by fractional heat kernels."""
__version__ = "0.1.0"
