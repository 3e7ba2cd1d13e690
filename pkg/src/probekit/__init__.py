"""Probing toolkit for learned molecular representations."""

__version__ = "0.1.0"
