"""Simulation of atom-to-photon cluster-state transfer through two-mode cavities."""

__version__ = "0.1.0"
