"""Nonlocal Poincare inequality toolkit."""

__version__ = "0.1.0"
