"""
Gradients, integrals, lumped loads, nodal recovery and field transfer.
"""

from .calculus import *
from .transfer import *

__all__ = [
    # From calculus.py
    'gradient', 'integrate', 'lumped_weights', 'load_vector', 'integrate_product',
    'recover_nodal', 'recovered_gradient', 'lp_norm', 'to_element',
    # From transfer.py
    'transfer_nodal', 'transfer_element'
]
