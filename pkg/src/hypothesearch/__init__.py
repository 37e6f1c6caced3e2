"""Inductive reasoning engine: hypothesis search with verified programs."""

__version__ = "0.1.0"
