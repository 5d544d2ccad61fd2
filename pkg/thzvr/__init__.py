"""Discrete-time simulator of an RIS-assisted terahertz VR network."""

__version__ = "0.1.0"
