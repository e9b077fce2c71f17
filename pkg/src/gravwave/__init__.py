"""Pseudo-spectral tools for 1-d gravity water waves with |D|^{1/2} dispersion."""

__version__ = "0.1.0"
