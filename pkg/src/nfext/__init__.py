"""Near-field electromagnetic response of extended radar targets."""

__version__ = "0.1.0"
