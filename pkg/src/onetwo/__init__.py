"""Markov chains, block dynamics and exact checks for the 1-2 model on the hexagonal lattice."""

__version__ = "0.1.0"
