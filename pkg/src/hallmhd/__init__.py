"""Mild solutions of generalized Hall-MHD on the periodic torus."""

__version__ = "0.1.0"
