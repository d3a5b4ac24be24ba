"""Outer optimal-design loop: multiplier search, design recovery and checks."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

from ..core.fields.base import ScalarField
from ..core.fields.types import StorageKind
from ..core.geometry.base import DomainSpec, Mesh
from ..core.geometry.primitives import build_mesh
from ..core.operations.calculus import gradient, integrate
from ..material.base import MaterialModel, normalize
from ..material.integrand import IntegrandF
from ..solver.state import F_energy, minimize_F_problem, minimize_state, state_energy
from ..solver.types import SolveConfig, SolveResult
from .characterization import kkt_residual, theta_for_budget, theta_from_u
from .duality import dual_value, flux
from .types import BracketError, DesignError, DesignSolution

logger = logging.getLogger(__name__)

LoadSpec = Union[float, ScalarField, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _probe(mu: float, f_tilde: ScalarField, model: MaterialModel, cfg: SolveConfig,
           initial: Optional[ScalarField] = None) -> Tuple[float, SolveResult, ScalarField]:
    result = minimize_F_problem(IntegrandF.from_model(model, mu), f_tilde, cfg, initial)
    theta = theta_from_u(result.u, mu, model)
    return integrate(theta), result, theta


def volume_of_mu(mu: float, f_tilde: ScalarField, model: MaterialModel,
                 cfg: Optional[SolveConfig] = None,
                 initial: Optional[ScalarField] = None) -> float:
    """Area of the design recovered from the F-problem at the multiplier mu.

    Args:
        mu: Multiplier, > 0.
        f_tilde: Normalized nodal load.
        model: Material model.
        cfg: Solver settings.
        initial: Optional warm start.

    Returns:
        The integral of theta_from_u(solve_F_problem(mu), mu).
    """
    if not mu > 0:
        raise DesignError(f"volume_of_mu needs mu > 0, got {mu}")
    return _probe(mu, f_tilde, model, cfg or SolveConfig(), initial)[0]


def volume_sweep(mus: Sequence[float], f_tilde: ScalarField, model: MaterialModel,
                 cfg: Optional[SolveConfig] = None) -> List[Tuple[float, float]]:
    """Evaluate volume_of_mu on a list of multipliers.

    Probes are independent; with ``cfg.threads > 1`` they run concurrently
    and the result keeps the input order.
    """
    cfg = cfg or SolveConfig()

    def run(mu: float) -> Tuple[float, float]:
        return float(mu), volume_of_mu(mu, f_tilde, model, cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(run, mus))
    return [run(mu) for mu in mus]


def check_monotone(sweep: Sequence[Tuple[float, float]], tol: float) -> List[int]:
    """Indices i where the volume increases from sweep[i] to sweep[i+1] by more than tol.

    The sweep is sorted by multiplier first.
    """
    ordered = sorted(sweep)
    return [i for i in range(len(ordered) - 1) if ordered[i + 1][1] > ordered[i][1] + tol]


def _as_load(mesh: Mesh, f: LoadSpec) -> ScalarField:
    if isinstance(f, ScalarField):
        if f.mesh is not mesh or not f.is_nodal:
            raise DesignError("the load must be a nodal field on the design mesh")
        return f
    if callable(f):
        return ScalarField.from_function(mesh, f, StorageKind.NODAL, name="f")
    return ScalarField.constant(mesh, float(f), StorageKind.NODAL, name="f")


def _magnitudes(u: ScalarField) -> np.ndarray:
    return np.linalg.norm(gradient(u).values, axis=1)


def _budget_quantile(s: np.ndarray, areas: np.ndarray, kappa: float) -> float:
    """Gradient level whose superlevel set has area kappa."""
    order = np.argsort(-s, kind="stable")
    filled = np.cumsum(areas[order])
    index = min(int(np.searchsorted(filled, kappa)), len(order) - 1)
    return float(s[order][index])


def _finish(mesh: Mesh, model: MaterialModel, f_tilde: ScalarField, theta: ScalarField,
            mu: float, cfg: SolveConfig, warm: ScalarField, u_F: Optional[ScalarField],
            steps: int, sweep: List[Tuple[float, float]], fallback: bool) -> DesignSolution:
    state = minimize_state(theta, f_tilde, model, cfg, warm)
    sigma = flux(state.u, theta, model)
    primal = state_energy(state.u, theta, f_tilde, model)
    solution = DesignSolution(
        u_hat=state.u, theta_hat=theta, mu_hat=mu, sigma_hat=sigma,
        primal_energy=primal, dual_energy=dual_value(theta, sigma, model),
        volume=integrate(theta), kkt_residual=0.0, mesh=mesh, model=model,
        f_tilde=f_tilde, u_F=u_F, state_residual=state.residual, bisection_steps=steps,
        sweep=sweep, fallback=fallback or state.fallback, history=list(state.history))
    return replace(solution, kkt_residual=kkt_residual(solution, model))


def solve_design(domain: Union[DomainSpec, Mesh], model: MaterialModel, f: LoadSpec,
                 cfg: Optional[SolveConfig] = None) -> DesignSolution:
    """Compute an optimal relaxed two-phase design.

    The mu = 0 branch is accepted when the all-alpha state has a nonzero
    gradient on an area of at most kappa. Otherwise the multiplier is
    bracketed from the all-beta and all-alpha states and bisected
    geometrically until the recovered design uses the budget to within
    ``cfg.vol_tol``. The final state is re-solved at the recovered design.

    Args:
        domain: Domain to mesh, or a ready mesh.
        model: Material model.
        f: Load as a constant, a function of (x, y) or a nodal field.
        cfg: Solver settings.

    Returns:
        DesignSolution.

    Raises:
        MaterialError: If kappa is not smaller than the mesh area.
        BracketError: If no multiplier interval brackets the budget.
        DesignError: If the search does not converge.
    """
    cfg = cfg or SolveConfig()
    mesh = build_mesh(domain) if isinstance(domain, DomainSpec) else domain
    model.check_budget(mesh.total_area)
    _, f_tilde = normalize(model.alpha, model.beta, model.p, _as_load(mesh, f))

    full = ScalarField.constant(mesh, 1.0, name="theta")
    u_alpha = minimize_state(full, f_tilde, model, cfg).u
    s_alpha = _magnitudes(u_alpha)
    threshold = cfg.grad_zero_tol * float(np.max(s_alpha)) if s_alpha.size else 0.0
    support = s_alpha > threshold
    if float(np.dot(mesh.areas, support)) <= model.kappa:
        logger.info("Budget covers the support of the gradient: mu_hat = 0")
        theta = ScalarField.element(mesh, support.astype(float), name="theta")
        return _finish(mesh, model, f_tilde, theta, 0.0, cfg, u_alpha, None, 0, [], False)

    empty = ScalarField.constant(mesh, 0.0, name="theta")
    u_beta = minimize_state(empty, f_tilde, model, cfg).u
    mu_hi = float(np.max(_magnitudes(u_beta)))
    mu_lo = 0.5 * _budget_quantile(s_alpha, mesh.areas, model.kappa) / (1.0 + model.c)
    mu_lo = min(mu_lo, 0.5 * mu_hi)
    sweep: List[Tuple[float, float]] = []
    target, tol = model.kappa, cfg.vol_tol * model.kappa

    def evaluate(mu: float, warm: Optional[ScalarField]):
        volume, result, theta = _probe(mu, f_tilde, model, cfg, warm)
        sweep.append((mu, volume))
        logger.debug("volume(%.12g) = %.12g", mu, volume)
        return volume, result, theta

    hi = evaluate(mu_hi, u_beta)
    for _ in range(cfg.bracket_expansions):
        if hi[0] <= target:
            break
        mu_hi *= 4.0
        hi = evaluate(mu_hi, hi[1].u)
    lo = evaluate(mu_lo, u_alpha)
    for _ in range(cfg.bracket_expansions):
        if lo[0] > target:
            break
        mu_lo /= 4.0
        lo = evaluate(mu_lo, lo[1].u)
    if hi[0] > target or lo[0] <= target:
        raise BracketError(
            f"volume never crosses kappa={target} on [{mu_lo:.6g}, {mu_hi:.6g}]", sweep)

    best = min((lo, hi), key=lambda probe: abs(probe[0] - target))
    best_mu = mu_lo if best is lo else mu_hi
    steps = 0
    regula_falsi = False
    while abs(best[0] - target) > tol:
        if steps >= cfg.max_bisection:
            raise DesignError(
                f"multiplier search did not converge in {steps} steps; "
                f"best volume {best[0]:.12g} for kappa {target}")
        if mu_hi / mu_lo - 1.0 < 1e-15:
            raise DesignError(f"multiplier bracket collapsed at mu={mu_lo:.15g}")
        if regula_falsi:
            t = (lo[0] - target) / (lo[0] - hi[0])
            t = min(max(t, 0.1), 0.9)
        else:
            t = 0.5
        mu = math.exp((1.0 - t) * math.log(mu_lo) + t * math.log(mu_hi))
        warm = lo[1].u if abs(math.log(mu / mu_lo)) < abs(math.log(mu_hi / mu)) else hi[1].u
        probe = evaluate(mu, warm)
        steps += 1
        if probe[0] > lo[0] + tol or probe[0] < hi[0] - tol:
            if not regula_falsi:
                logger.warning("volume(mu) is not monotone near mu=%.6g; switching to "
                               "regula falsi", mu)
            regula_falsi = True
        if probe[0] > target:
            lo, mu_lo = probe, mu
        else:
            hi, mu_hi = probe, mu
        if abs(probe[0] - target) < abs(best[0] - target):
            best, best_mu = probe, mu

    volume, result, theta = best
    logger.info("mu_hat = %.12g after %d steps, volume %.12g", best_mu, steps, volume)
    return _finish(mesh, model, f_tilde, theta, best_mu, cfg, result.u, result.u, steps,
                   sweep, result.fallback)


def kkt_energy(u: ScalarField, theta: ScalarField, mu: float, f_tilde: ScalarField,
               model: MaterialModel) -> float:
    """Lagrangian with the multiplier term: state energy + (c mu^p / p') * integral theta."""
    return (state_energy(u, theta, f_tilde, model)
            + model.c * mu ** model.p / model.p_conj * integrate(theta))


def formulation_gap(sol: DesignSolution, model: MaterialModel) -> float:
    """Relative mismatch between the F-problem energy and the Lagrangian at the optimum.

    Compares the exact F-integrand energy of ``sol.u_F`` with the Lagrangian
    of the re-solved state at ``sol.theta_hat``; on the mu = 0 branch the
    F-energy of ``sol.u_hat`` is used.
    """
    F = IntegrandF.from_model(model, sol.mu_hat)
    source = sol.u_F if sol.u_F is not None else sol.u_hat
    f_energy = F_energy(source, F, sol.f_tilde)
    lagrangian = kkt_energy(sol.u_hat, sol.theta_hat, sol.mu_hat, sol.f_tilde, model)
    return abs(f_energy - lagrangian) / max(abs(f_energy), np.finfo(float).tiny)


def alternating_minimization(mesh: Mesh, model: MaterialModel, f: LoadSpec, iterations: int,
                             cfg: Optional[SolveConfig] = None) -> Tuple[ScalarField, List[float]]:
    """Block-coordinate descent over state and design, as a cross-check.

    Starts from the uniform design using the whole budget, then alternates a
    state solve with the best design for the current gradient magnitudes.

    Returns:
        The last design and the energy after every state solve; the
        energies are non-increasing.
    """
    cfg = cfg or SolveConfig()
    model.check_budget(mesh.total_area)
    _, f_tilde = normalize(model.alpha, model.beta, model.p, _as_load(mesh, f))
    theta = ScalarField.constant(mesh, model.kappa / mesh.total_area, name="theta")
    energies: List[float] = []
    u = None
    for _ in range(iterations):
        u = minimize_state(theta, f_tilde, model, cfg, u).u
        energies.append(state_energy(u, theta, f_tilde, model))
        s = _magnitudes(u)
        theta = ScalarField.element(mesh, theta_for_budget(s, mesh.areas, model.kappa, model.c),
                                    name="theta")
    return theta, energies
