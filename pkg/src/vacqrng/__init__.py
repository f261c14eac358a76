"""Simulator and entropy toolkit for a vacuum-fluctuation QRNG driven by multi-mode coherent states."""

__version__ = "0.1.0"
