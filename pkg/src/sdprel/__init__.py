"""Relation classification over shortest dependency paths."""

__version__ = "0.1.0"
