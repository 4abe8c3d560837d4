"""Pulse learning from end-to-end propagator measurements."""
__version__ = "0.1.0"
