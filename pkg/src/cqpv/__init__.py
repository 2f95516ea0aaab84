"""Simulation and analysis of committing quantum position verification."""

from . import devices, estimate, protocol, qcore, strategies, verdict

__version__ = "0.1.0"

__all__ = ["devices", "estimate", "protocol", "qcore", "strategies", "verdict", "__version__"]
