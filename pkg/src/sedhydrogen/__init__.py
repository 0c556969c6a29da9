"""Stochastic-electrodynamics simulation of the hydrogen-like ground state."""

__version__ = "0.1.0"
