"""Activated random walk laboratory: stabilization engine, bounds, experiments."""

__version__ = "0.1.0"
