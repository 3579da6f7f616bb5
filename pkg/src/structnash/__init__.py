"""Exact Nash equilibria of structured games by path following."""

__version__ = "0.1.0"
