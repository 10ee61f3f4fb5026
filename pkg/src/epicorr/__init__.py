"""Regime detection in multi-region daily-count panels."""
__version__ = "0.1.0"
