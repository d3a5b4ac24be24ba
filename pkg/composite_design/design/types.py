"""Design solution container and custom exceptions."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..core.fields.base import ScalarField, VectorField
from ..core.geometry.base import Mesh
from ..material.base import MaterialModel
from ..solver.types import IterationRecord


class DesignError(Exception):
    """Base class for optimal-design errors."""
    pass


class BracketError(DesignError):
    """Error raised when no multiplier interval brackets the volume budget.

    Attributes:
        sweep: The (mu, volume) pairs evaluated while searching.
    """

    def __init__(self, message: str, sweep: List[Tuple[float, float]]) -> None:
        super().__init__(message)
        self.sweep = list(sweep)


@dataclass(frozen=True, eq=False)
class DesignSolution:
    """One converged optimal-design solve.

    Attributes:
        u_hat: State at the optimal design, nodal.
        theta_hat: Optimal alpha proportion per element.
        mu_hat: Kuhn-Tucker multiplier of the volume constraint.
        sigma_hat: Flux per element.
        primal_energy: Normalized potential energy of (u_hat, theta_hat).
        dual_energy: Flux functional value; equals -primal_energy at the optimum.
        volume: Integral of theta_hat.
        kkt_residual: Optimality defect, see ``kkt_residual``.
        mesh: The mesh.
        model: The material model.
        f_tilde: Normalized nodal load.
        u_F: Minimizer of the F-integrand problem at mu_hat (None on the
            mu_hat = 0 branch).
        state_residual: Relative gradient norm of the final state solve.
        bisection_steps: Multiplier evaluations used by the search.
        sweep: (mu, volume) pairs evaluated during the search.
        fallback: True when an exact stage fell back to a smoothed one.
        history: Newton iterations of the final state solve.
    """
    u_hat: ScalarField
    theta_hat: ScalarField
    mu_hat: float
    sigma_hat: VectorField
    primal_energy: float
    dual_energy: float
    volume: float
    kkt_residual: float
    mesh: Mesh
    model: MaterialModel
    f_tilde: ScalarField
    u_F: Optional[ScalarField] = None
    state_residual: float = 0.0
    bisection_steps: int = 0
    sweep: List[Tuple[float, float]] = field(default_factory=list)
    fallback: bool = False
    history: List[IterationRecord] = field(default_factory=list)

    @property
    def branch(self) -> str:
        """'zero' for the mu_hat = 0 branch, 'positive' otherwise."""
        return "zero" if self.mu_hat == 0 else "positive"
