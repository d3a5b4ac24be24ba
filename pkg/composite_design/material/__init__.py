"""
Two-phase material model and the theta-eliminated integrand.
"""

from .base import *
from .integrand import *
from .types import *

__all__ = [
    # From base.py
    'MaterialModel', 'normalize', 'homog_coeff', 'state_density', 'perspective_density',
    'primal_energy',
    # From integrand.py
    'IntegrandF', 'F_value_and_slope',
    # From types.py
    'MaterialError'
]
