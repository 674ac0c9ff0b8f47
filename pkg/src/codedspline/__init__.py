"""Coded distributed computing with smoothing-spline encoders and decoders."""

__version__ = "0.1.0"
