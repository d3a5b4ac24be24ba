"""
Nodal and per-element discrete fields.
"""

from .base import *
from .types import *

__all__ = ['ScalarField', 'VectorField', 'StorageKind', 'FieldError']
