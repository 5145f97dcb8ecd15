"""Numerical laboratory for Stein variational gradient descent and its mean-field limit."""

__version__ = "0.1.0"
