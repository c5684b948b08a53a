"""Dissipative Camassa-Holm solutions through Lagrangian characteristics."""

__version__ = "0.1.0"
