"""Coupled kicked-top laboratory: spectra, entanglement, symmetry and classical dynamics."""

__version__ = "0.1.0"
