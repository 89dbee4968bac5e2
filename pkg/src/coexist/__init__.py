"""Dilute Ising model toolkit: Glauber dynamics, random-cluster representation,
surface tension, exact spectral analysis and energy-barrier geometry."""

__version__ = "0.1.0"
