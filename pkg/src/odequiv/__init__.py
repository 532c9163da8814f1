"""Equivalence and integrability analysis for y'' + a(x) y' + b(x) y = 0."""

__version__ = "0.1.0"
