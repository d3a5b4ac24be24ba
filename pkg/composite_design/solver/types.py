"""Solver configuration, results and exceptions."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..core.fields.base import ScalarField


@dataclass(frozen=True)
class SolveConfig:
    """Numerical settings for Newton solves and the outer design loop.

    Attributes:
        newton_tol: Tolerance on the free-node energy gradient relative to the
            magnitudes of the assembled internal forces and the load.
        stall_tol: Relative gradient level below which a Newton step that
            cannot decrease the energy any further counts as converged.
        max_iter: Newton iterations allowed per continuation stage.
        armijo_c: Sufficient-decrease constant of the backtracking search.
        hessian_floor: Lower bound on the curvature terms of element Hessians.
        eps_schedule: Decreasing smoothing levels; a trailing 0 requests the
            exact integrand with fallback to the previous stage.
        vol_tol: Relative tolerance on the volume constraint.
        max_bisection: Iterations allowed when searching the multiplier.
        bracket_expansions: How many times a multiplier bracket end may be
            pushed outwards before giving up.
        grad_zero_tol: Relative threshold below which a gradient counts as zero.
        min_step: Smallest line-search step before damping is increased.
        threads: Worker threads for independent solves.
        record_history: Whether Newton iterations are kept in results.
    """
    newton_tol: float = 1e-10
    stall_tol: float = 1e-8
    max_iter: int = 200
    armijo_c: float = 1e-4
    hessian_floor: float = 1e-10
    eps_schedule: Tuple[float, ...] = (1e-2, 1e-4, 1e-6, 0.0)
    vol_tol: float = 1e-5
    max_bisection: int = 200
    bracket_expansions: int = 12
    grad_zero_tol: float = 1e-8
    min_step: float = 1e-12
    threads: int = 1
    record_history: bool = True

    def __post_init__(self) -> None:
        if not self.newton_tol > 0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if not self.stall_tol > 0:
            raise ValueError(f"stall_tol must be positive, got {self.stall_tol}")
        if not self.max_iter >= 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if not 0 < self.armijo_c < 1:
            raise ValueError(f"armijo_c must lie in (0, 1), got {self.armijo_c}")
        if not self.hessian_floor > 0:
            raise ValueError(f"hessian_floor must be positive, got {self.hessian_floor}")
        schedule = tuple(float(e) for e in self.eps_schedule)
        object.__setattr__(self, "eps_schedule", schedule)
        if not schedule:
            raise ValueError("eps_schedule must not be empty")
        if any(not 0 <= e < 1 for e in schedule):
            raise ValueError("eps_schedule entries must lie in [0, 1)")
        if any(b >= a for a, b in zip(schedule, schedule[1:])):
            raise ValueError("eps_schedule must be strictly decreasing")
        if not self.vol_tol > 0:
            raise ValueError(f"vol_tol must be positive, got {self.vol_tol}")
        if not self.max_bisection >= 1:
            raise ValueError(f"max_bisection must be at least 1, got {self.max_bisection}")
        if not self.threads >= 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")


@dataclass(frozen=True)
class IterationRecord:
    """One accepted Newton iteration."""
    iteration: int
    energy: float
    residual: float
    step_length: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of a (possibly staged) energy minimization.

    Attributes:
        u: Minimizer, nodal with the Dirichlet tag.
        energy: Discrete energy of ``u`` for the problem that was asked for
            (unsmoothed where the final stage is exact).
        residual: Relative free-node gradient norm of that energy at ``u``.
        iterations: Total Newton iterations over all stages.
        epsilon: Smoothing level of the stage that produced ``u``.
        fallback: True when the exact stage failed and ``u`` comes from
            the last smoothed stage.
        history: Accepted iterations, in order.
    """
    u: ScalarField
    energy: float
    residual: float
    iterations: int
    epsilon: float = 0.0
    fallback: bool = False
    history: List[IterationRecord] = field(default_factory=list)


class SolverError(Exception):
    """Base class for solver errors."""
    pass


class ConvergenceError(SolverError):
    """Error raised when Newton's method does not reach the tolerance.

    Attributes:
        last_iterate: Nodal values of the last accepted iterate.
        history: Accepted iterations up to the failure.
        residual: Relative gradient norm at the last iterate.
    """

    def __init__(self, message: str, last_iterate: Optional[np.ndarray] = None,
                 history: Optional[List[IterationRecord]] = None,
                 residual: float = float("nan")) -> None:
        super().__init__(message)
        self.last_iterate = last_iterate
        self.history = list(history or [])
        self.residual = residual
