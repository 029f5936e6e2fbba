"""Maturity randomization for finite-horizon stochastic control."""

__version__ = "0.1.0"
