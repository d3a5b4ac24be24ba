"""
Disk oracle and regularity diagnostics of optimal designs.
"""

from .oracle import *
from .regularity import *

__all__ = [
    # From oracle.py
    'RadialOracle', 'radial_oracle',
    # From regularity.py
    'flux_h1_seminorm', 'CommutatorReport', 'default_band_tol', 'theta_sigma_commutator',
    'curl_residual', 'intermediate_measure', 'boundary_flux_alignment',
    'theta_interface_violation', 'DiagnosticsReport', 'diagnose'
]
