"""Generalized fiducial inference for sparse additive models."""

__version__ = "0.1.0"
