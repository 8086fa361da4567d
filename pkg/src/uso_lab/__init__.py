"""Unique sink orientations of grid graphs and the Random-Edge walk."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CyclicityError,
    InputError,
    InternalError,
    InvalidUsoError,
    ParseError,
    PropertyViolation,
    SamplingError,
    UsoLabError,
)
from .grid import GridOrientation, GridShape, Vertex  # noqa: F401

__all__ = [
    "CyclicityError",
    "GridOrientation",
    "GridShape",
    "InputError",
    "InternalError",
    "InvalidUsoError",
    "ParseError",
    "PropertyViolation",
    "SamplingError",
    "UsoLabError",
    "Vertex",
]
