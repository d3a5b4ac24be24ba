"""
Domains, triangular meshes and mesh refinement.
"""

from .base import *
from .primitives import *
from .types import *

__all__ = [
    # From base.py
    'DomainSpec', 'Mesh',
    # From primitives.py
    'Domain', 'Rectangle', 'Disk', 'Polygon', 'build_mesh', 'refine', 'domain_from_spec',
    # From types.py
    'ShapeType', 'GeometryError', 'GeometryValidationError'
]
