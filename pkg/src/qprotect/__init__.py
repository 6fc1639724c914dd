"""Simulation and parameter search for composite (feedforward + feedback) qubit protection."""

__version__ = "0.1.0"
