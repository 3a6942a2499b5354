"""Bounded Kolmogorov complexity, LZ78 conditional estimates and Ising
microstate trajectories for testing complexity as a stand-in for entropy."""

__version__ = "0.1.0"
