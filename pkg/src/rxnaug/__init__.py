"""Augmented SMILES toolkit for reaction prediction."""

__version__ = "0.1.0"
