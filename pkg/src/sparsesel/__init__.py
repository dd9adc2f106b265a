"""Sparse minimum-squared-error feature selection for pairwise face recognition."""

__version__ = "0.1.0"
