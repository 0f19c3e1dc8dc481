"""Finite certificates for topological full groups of Z^d subshifts."""
__version__ = "0.1.0"
