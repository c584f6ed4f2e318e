"""Weak-trace-free counterfactual communication: discrete-mode protocol,
Monte Carlo error analysis and a wavepacket demonstration."""

__version__ = "0.1.0"
