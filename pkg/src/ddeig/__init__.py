"""Accurate smallest eigenvalues of ill-conditioned diagonally dominant operators."""

__version__ = "0.1.0"
