"""Curvature, heat flow and Li-Yau type inequalities on finite weighted graphs."""

from .graph import WeightedGraph, validate, load, save
from .operators import laplacian, gamma, gamma2, gamma2_tilde

__all__ = ["WeightedGraph", "validate", "load", "save", "laplacian", "gamma", "gamma2", "gamma2_tilde"]
