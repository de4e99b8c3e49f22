"""Simulation and Foster-Lyapunov verification for branching processes with competition in a Levy environment."""
__version__ = "0.1.0"
