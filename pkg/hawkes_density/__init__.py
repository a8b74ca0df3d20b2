"""Simulation and estimation of the interaction density p of N-dimensional
Hawkes processes whose interactions are drawn from a Bernoulli(p) graph."""

__version__ = "0.1.0"
