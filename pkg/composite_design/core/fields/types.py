"""Field storage kinds and custom exceptions."""

from enum import Enum, auto


class StorageKind(Enum):
    """Where the degrees of freedom of a discrete field live."""
    NODAL = auto()
    ELEMENT = auto()


class FieldError(Exception):
    """Error raised for malformed or incompatible discrete fields."""
    pass
