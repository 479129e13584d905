"""Choi-echo diagnostics of local decoherence and chaos in spin-1/2 chains."""

__version__ = "0.1.0"
