"""Bounds and blind estimators for frequency-independent receiver I/Q imbalance in CP-OFDM."""

__version__ = "0.1.0"
