"""Backdoor set detection for SAT and CSP into tractable base classes."""

__version__ = "0.1.0"
