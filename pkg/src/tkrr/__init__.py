"""Tensorized kernel ridge regression with CPD-constrained weights."""

__version__ = "0.1.0"
