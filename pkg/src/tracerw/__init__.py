"""Traced type checking and nondeterministic evaluation for a strategic rewriting language."""

__version__ = "0.1.0"
