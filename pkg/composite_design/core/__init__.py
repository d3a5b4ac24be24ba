"""
Core discretization layer: domains, meshes, discrete fields and calculus.
"""

from . import geometry
from . import fields
from . import operations

__all__ = ['geometry', 'fields', 'operations']
