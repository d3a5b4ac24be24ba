"""
Newton solvers for the state equation and the F-integrand problem.
"""

from .newton import *
from .state import *
from .types import *

__all__ = [
    # From newton.py
    'ElementDensity', 'PowerDensity', 'IntegrandDensity', 'DiscreteEnergy', 'newton_minimize',
    # From state.py
    'minimize_state', 'solve_state', 'minimize_F_problem', 'solve_F_problem', 'state_energy',
    'F_energy',
    # From types.py
    'SolveConfig', 'SolveResult', 'IterationRecord', 'SolverError', 'ConvergenceError'
]
