"""Ising-network foraging agents: dynamics, evolution, criticality, analysis."""

__version__ = "0.1.0"
