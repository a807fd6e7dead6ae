"""Quarterly private-equity deal-flow signals for public-market direction."""

__version__ = "0.1.0"
