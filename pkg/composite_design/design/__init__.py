"""
Optimal design: multiplier search, design recovery and duality checks.
"""

from .characterization import *
from .duality import *
from .optimizer import *
from .types import *

__all__ = [
    # From characterization.py
    'theta_from_u', 'theta_from_magnitudes', 'theta_for_budget', 'kkt_residual',
    # From duality.py
    'DualReport', 'flux', 'dual_value', 'dual_theta', 'minmax_value', 'divergence_residual',
    'dual_report',
    # From optimizer.py
    'volume_of_mu', 'volume_sweep', 'check_monotone', 'solve_design', 'kkt_energy',
    'formulation_gap', 'alternating_minimization',
    # From types.py
    'DesignSolution', 'DesignError', 'BracketError'
]
