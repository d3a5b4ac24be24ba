"""Geometry types and custom exceptions."""

from enum import Enum, auto


class ShapeType(Enum):
    """Enumeration of supported domain shapes."""
    RECTANGLE = auto()
    DISK = auto()
    POLYGON = auto()


class GeometryError(Exception):
    """Base class for geometry-related errors."""
    pass


class GeometryValidationError(GeometryError):
    """Error raised when a domain or mesh fails validation."""
    pass
