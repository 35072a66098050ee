"""Desk-scale laboratory for robust view synthesis from inconsistent captures."""

__version__ = "0.1.0"
