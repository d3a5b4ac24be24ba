"""
Laminate microstructures: layer profiles, corrected states and energy tables.
"""

from .laminate import *
from .profiles import *
from .types import *

__all__ = [
    # From laminate.py
    'LaminateSpec', 'LaminateRow', 'laminate_spec_from_fields', 'partition_of_unity',
    'partition_gradients', 'check_resolution', 'build_laminate', 'corrector_bound',
    'laminate_energy', 'layer_fraction', 'resolved_laminate_energy',
    'homogenized_energy', 'cell_limit_energy', 'cube_averages', 'laminate_convergence',
    # From profiles.py
    'H_eval', 'G_eval',
    # From types.py
    'LaminationError'
]
