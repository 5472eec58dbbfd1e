"""Removable singularities lab: weighted 1D theory, grid capacities and p-harmonic solves."""

__version__ = "0.1.0"
