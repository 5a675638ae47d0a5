"""Branching-policy discovery toolkit for a small pure-Python MILP solver."""

__version__ = "0.1.0"
