"""Doubly adaptive penalty solver for 2D incompressible Navier-Stokes."""

__version__ = "0.1.0"
