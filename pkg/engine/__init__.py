"""Exact cumulant calculus and normal-characterization checks."""

__version__ = "1.0.0"
