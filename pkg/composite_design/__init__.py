"""
Composite Design Package

Optimal two-phase material design for the p-Laplacian: relaxed designs,
their duality checks, laminate realizations and regularity diagnostics.
"""

from . import core
from . import material
from . import solver
from . import design
from . import lamination
from . import diagnostics
from . import document

__all__ = ['core', 'material', 'solver', 'design', 'lamination', 'diagnostics', 'document']
