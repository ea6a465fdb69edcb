"""Generating and resolving first and subsequent references in visually grounded dialogue."""

__version__ = "0.1.0"
