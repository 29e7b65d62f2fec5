"""Spontaneous photon emission in collapse models: kernels, rates and noise fields."""

__version__ = "0.1.0"
