"""State and F-integrand problems solved by staged damped Newton."""

from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.sparse.linalg import spsolve

from ..core.fields.base import ScalarField
from ..core.fields.types import FieldError
from ..core.operations.calculus import load_vector
from ..material.base import MaterialModel, state_density
from ..material.integrand import IntegrandF
from .newton import DiscreteEnergy, ElementDensity, IntegrandDensity, PowerDensity, newton_minimize
from .types import SolveConfig, SolveResult, IterationRecord, ConvergenceError

logger = logging.getLogger(__name__)


def _linear_guess(mesh, load: np.ndarray, coefficient: np.ndarray) -> np.ndarray:
    """Solve the linear problem -div(k grad v) = f as a starting point.

    At u = 0 the Hessian of the quadratic energy is the stiffness matrix of k.
    """
    energy = DiscreteEnergy(mesh, PowerDensity(coefficient, 2.0), load)
    u = np.zeros(mesh.n_nodes)
    if energy.free.size:
        u[energy.free] = spsolve(energy.hessian(u).tocsc(), load[energy.free])
    return u


def _reference_gradient(mesh, u: np.ndarray) -> float:
    s = np.linalg.norm(mesh.element_gradients(u), axis=1)
    scale = float(np.max(s)) if s.size else 0.0
    return scale if scale > 0 else 1.0


def _run_stages(mesh, load: np.ndarray, u0: np.ndarray, stages: Sequence[Tuple[float, float]],
                make_density, cfg: SolveConfig, anchor: Optional[np.ndarray] = None,
                proximal_weight: float = 0.0) -> SolveResult:
    """Run a continuation over (epsilon, delta) stages with warm starts.

    A smoothed stage that misses the tolerance hands its last iterate to
    the next stage. A failure of the last stage falls back to the previous
    stage's minimizer when the last stage is the exact (epsilon = 0) problem.
    """
    history: List[IterationRecord] = []
    u = np.array(u0, dtype=float)
    u[mesh.boundary_nodes] = 0.0
    iterations = 0
    reached = None
    fallback = False
    for index, (epsilon, delta) in enumerate(stages):
        energy = DiscreteEnergy(mesh, make_density(epsilon), load, delta, cfg.hessian_floor,
                                anchor, proximal_weight)
        try:
            u_next, used = newton_minimize(energy, u, cfg, history, iterations)
        except ConvergenceError as error:
            last = index == len(stages) - 1
            if last and epsilon == 0 and reached is not None:
                logger.warning("Exact stage failed (%s); keeping the epsilon=%g minimizer",
                               error, reached)
                fallback = True
                break
            if not last and error.last_iterate is not None \
                    and np.all(np.isfinite(error.last_iterate)):
                logger.warning("Stage epsilon=%g stopped at residual %.3e; continuing",
                               epsilon, error.residual)
                u = np.array(error.last_iterate, dtype=float)
                iterations = len(history) if cfg.record_history else iterations
                continue
            raise
        u, reached = u_next, epsilon
        iterations += used
        logger.debug("Stage epsilon=%g delta=%g done in %d iterations", epsilon, delta, used)

    target = stages[-1][0]
    exact = DiscreteEnergy(mesh, make_density(target), load, 0.0, cfg.hessian_floor, anchor,
                           proximal_weight)
    value = exact.value(u)
    residual = exact.residual(u)
    if not np.isfinite(residual):
        residual = DiscreteEnergy(mesh, make_density(reached), load, 0.0, cfg.hessian_floor,
                                  anchor, proximal_weight).residual(u)
    field = ScalarField.nodal(mesh, u, dirichlet=True, name="u")
    return SolveResult(field, value, residual, iterations, reached, fallback, history)


def _delta_stages(epsilons: Sequence[float], p: float, s_ref: float) -> List[Tuple[float, float]]:
    # Gradient regularization is only needed where phi'' blows up at 0.
    return [(e, e * s_ref if p < 2 else 0.0) for e in epsilons]


def _check_inputs(theta: ScalarField, f_tilde: ScalarField) -> None:
    if theta.is_nodal:
        raise FieldError("theta must be a per-element field")
    if not f_tilde.is_nodal:
        raise FieldError("the load must be a nodal field")
    if theta.mesh is not f_tilde.mesh:
        raise FieldError("theta and the load live on different meshes")


def minimize_state(theta: ScalarField, f_tilde: ScalarField, model: MaterialModel,
                   cfg: Optional[SolveConfig] = None,
                   initial: Optional[ScalarField] = None) -> SolveResult:
    """Minimize the weighted p-Dirichlet energy at a fixed design.

    The energy is (1/p) sum_T area_T |grad u|^p / (1+c theta_T)^(p-1) - <f_tilde, u>.
    For p < 2 the gradient magnitude is regularized by delta = eps * s_ref
    along the smoothing schedule, ending unregularized.

    Args:
        theta: Per-element design in [0, 1].
        f_tilde: Normalized nodal load.
        model: Material model.
        cfg: Solver settings.
        initial: Optional warm start.

    Returns:
        SolveResult with the minimizer and its convergence record.

    Raises:
        ConvergenceError: If Newton does not converge.
    """
    cfg = cfg or SolveConfig()
    _check_inputs(theta, f_tilde)
    mesh = theta.mesh
    coefficient = state_density(theta.values, model)
    load = load_vector(f_tilde)
    u0 = initial.values if initial is not None else _linear_guess(mesh, load, coefficient)
    epsilons = cfg.eps_schedule if model.p < 2 else (0.0,)
    if epsilons[-1] != 0.0:
        epsilons = tuple(epsilons) + (0.0,)
    stages = _delta_stages(epsilons, model.p, _reference_gradient(mesh, u0))

    def make_density(_epsilon: float) -> ElementDensity:
        return PowerDensity(coefficient, model.p)

    return _run_stages(mesh, load, u0, stages, make_density, cfg)


def solve_state(theta: ScalarField, f_tilde: ScalarField, model: MaterialModel,
                cfg: Optional[SolveConfig] = None,
                initial: Optional[ScalarField] = None) -> ScalarField:
    """Solve the state equation at a fixed design and return u."""
    return minimize_state(theta, f_tilde, model, cfg, initial).u


def minimize_F_problem(F: IntegrandF, f_tilde: ScalarField, cfg: Optional[SolveConfig] = None,
                       initial: Optional[ScalarField] = None,
                       anchor: Optional[ScalarField] = None,
                       proximal_weight: float = 0.0) -> SolveResult:
    """Minimize sum_T area_T F_eps(|grad u|_T) - <f_tilde, u> by continuation in eps.

    Stages run through the schedule levels above ``F.epsilon`` and finish at
    ``F.epsilon`` itself, each warm-started from the previous one. With a
    positive ``proximal_weight`` the lumped term (w/2) |u - anchor|^2 is added.

    Args:
        F: Integrand; its epsilon is the final smoothing level.
        f_tilde: Normalized nodal load.
        cfg: Solver settings.
        initial: Optional warm start.
        anchor: Reference state of the proximal term.
        proximal_weight: Weight of the proximal term, >= 0.

    Returns:
        SolveResult; its energy and residual refer to the final level.

    Raises:
        ConvergenceError: If a stage does not converge and no fallback applies.
    """
    cfg = cfg or SolveConfig()
    if not f_tilde.is_nodal:
        raise FieldError("the load must be a nodal field")
    if proximal_weight < 0:
        raise ValueError(f"proximal_weight must be non-negative, got {proximal_weight}")
    if proximal_weight > 0 and anchor is None:
        raise ValueError("a proximal term needs an anchor state")
    mesh = f_tilde.mesh
    load = load_vector(f_tilde)
    if initial is not None:
        u0 = initial.values
    else:
        u0 = _linear_guess(mesh, load, np.ones(mesh.n_elements))
    epsilons = [e for e in cfg.eps_schedule if e > F.epsilon] + [F.epsilon]
    stages = _delta_stages(epsilons, F.p, _reference_gradient(mesh, u0))

    def make_density(epsilon: float) -> ElementDensity:
        return IntegrandDensity(F.with_epsilon(epsilon))

    anchor_values = None if anchor is None else anchor.values
    return _run_stages(mesh, load, u0, stages, make_density, cfg, anchor_values,
                       proximal_weight)


def solve_F_problem(F: IntegrandF, f_tilde: ScalarField,
                    cfg: Optional[SolveConfig] = None,
                    initial: Optional[ScalarField] = None) -> ScalarField:
    """Minimize the F-integrand energy and return u."""
    return minimize_F_problem(F, f_tilde, cfg, initial).u


def state_energy(u: ScalarField, theta: ScalarField, f_tilde: ScalarField,
                 model: MaterialModel) -> float:
    """Discrete state energy of u at the design theta."""
    energy = DiscreteEnergy(u.mesh, PowerDensity(state_density(theta.values, model), model.p),
                            load_vector(f_tilde))
    return energy.value(u.values)


def F_energy(u: ScalarField, F: IntegrandF, f_tilde: ScalarField) -> float:
    """Discrete F-integrand energy of u."""
    return DiscreteEnergy(u.mesh, IntegrandDensity(F), load_vector(f_tilde)).value(u.values)
