"""Exact Rauzy-Veech induction and certified paths of uniquely ergodic IETs."""

__version__ = "0.1.0"
