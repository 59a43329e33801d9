"""Numerical laboratory for the low Mach number limit of 2D compressible Euler."""

from machlab.errors import (
    AccuracyError,
    BlowUpError,
    ConfigurationError,
    PreconditionError,
    RangeError,
)
from machlab.spectral import Grid, SpectralField, VectorField

__all__ = [
    "AccuracyError",
    "BlowUpError",
    "ConfigurationError",
    "PreconditionError",
    "RangeError",
    "Grid",
    "SpectralField",
    "VectorField",
]

__version__ = "0.1.0"
