"""Flux, dual functional and primal-dual verification of a design."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional
import logging

import numpy as np

from ..core.fields.base import ScalarField, VectorField
from ..core.operations.calculus import gradient, integrate, load_vector, lp_norm
from ..material.base import MaterialModel
from ..material.integrand import IntegrandF
from ..solver.state import minimize_F_problem, solve_state
from ..solver.types import SolveConfig
from .characterization import theta_from_u
from .types import DesignSolution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualReport:
    """Primal-dual verification of a design solution.

    Attributes:
        primal_value: Primal energy of the solution.
        dual_value: Flux functional at (theta_hat, sigma_hat).
        gap: |primal + dual| / max(1, |primal|).
        div_residual: Largest weak divergence defect over interior nodes,
            relative to the largest nodal load.
        flux_spread: Largest L^p' distance between sigma_hat and the flux of
            a restarted solve.
        relative_gap: |primal + dual| / |primal|.
        flux_norm: L^p' norm of sigma_hat.
        minmax_value: Inner maximum over designs of the flux functional at
            sigma_hat.
        restarts: Number of restarted solves.
    """
    primal_value: float
    dual_value: float
    gap: float
    div_residual: float
    flux_spread: float
    relative_gap: float
    flux_norm: float
    minmax_value: float
    restarts: int

    @property
    def relative_flux_spread(self) -> float:
        return self.flux_spread / self.flux_norm if self.flux_norm > 0 else 0.0


def flux(u: ScalarField, theta: ScalarField, model: MaterialModel) -> VectorField:
    """Flux |grad u|^(p-2) grad u / (1 + c theta)^(p-1) per element.

    The flux is zero on elements with vanishing gradient.
    """
    g = gradient(u).values
    s = np.linalg.norm(g, axis=1)
    positive = s > 0
    factor = np.zeros_like(s)
    factor[positive] = s[positive] ** (model.p - 2.0)
    factor /= (1.0 + model.c * theta.values) ** (model.p - 1.0)
    return VectorField(u.mesh, factor[:, None] * g, name="sigma")


def dual_value(theta: ScalarField, sigma: VectorField, model: MaterialModel) -> float:
    """Flux functional (1/p') * integral (1 + c theta) |sigma|^p'.

    At the optimum the primal energy equals minus this value.
    """
    magnitude = np.linalg.norm(sigma.values, axis=1)
    density = (1.0 + model.c * theta.values) * magnitude ** model.p_conj
    return integrate(density, sigma.mesh) / model.p_conj


def dual_theta(sigma: VectorField, kappa: float, model: MaterialModel) -> ScalarField:
    """Design maximizing the flux functional at a fixed flux.

    The objective is linear in theta, so the budget is spent on the elements
    with the largest |sigma|^p', ties broken by element index; the element
    at the cut receives a fractional value.
    """
    mesh = sigma.mesh
    weight = np.linalg.norm(sigma.values, axis=1) ** model.p_conj
    order = np.lexsort((np.arange(mesh.n_elements), -weight))
    areas = mesh.areas[order]
    filled = np.cumsum(areas)
    before = filled - areas
    share = np.clip((kappa - before) / areas, 0.0, 1.0)
    theta = np.zeros(mesh.n_elements)
    theta[order] = share
    return ScalarField.element(mesh, theta, name="theta")


def minmax_value(sigma: VectorField, kappa: float, model: MaterialModel) -> float:
    """Inner maximum over feasible designs of the flux functional."""
    return dual_value(dual_theta(sigma, kappa, model), sigma, model)


def divergence_residual(sigma: VectorField, f_tilde: ScalarField) -> float:
    """Largest weak divergence defect against interior hat functions.

    Computes max_i |sum_T area_T sigma_T . grad phi_i - <f_tilde, phi_i>| over
    interior nodes, relative to the largest interior load entry.
    """
    mesh = sigma.mesh
    local = mesh.areas[:, None] * np.einsum("mki,mk->mi", mesh.grad_maps, sigma.values)
    tested = np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.n_nodes)
    load = load_vector(f_tilde)
    interior = mesh.interior_nodes
    if interior.size == 0:
        return 0.0
    scale = float(np.max(np.abs(load[interior])))
    defect = float(np.max(np.abs(tested[interior] - load[interior])))
    return defect / scale if scale > 0 else defect


def _restart_flux(sol: DesignSolution, model: MaterialModel, cfg: SolveConfig,
                  start: np.ndarray) -> VectorField:
    initial = ScalarField.nodal(sol.mesh, start)
    if sol.mu_hat > 0:
        F = IntegrandF.from_model(model, sol.mu_hat)
        u_F = minimize_F_problem(F, sol.f_tilde, cfg, initial).u
        theta = theta_from_u(u_F, sol.mu_hat, model)
        u = solve_state(theta, sol.f_tilde, model, cfg, u_F)
    else:
        theta = sol.theta_hat
        u = solve_state(theta, sol.f_tilde, model, cfg, initial)
    return flux(u, theta, model)


def dual_report(sol: DesignSolution, n_restarts: int, model: MaterialModel,
                cfg: Optional[SolveConfig] = None, seed: int = 0) -> DualReport:
    """Verify a design solution through its dual.

    Args:
        sol: Converged design solution.
        n_restarts: Independent solves from random initial states.
        model: Material model.
        cfg: Solver settings; ``cfg.threads`` workers run the restarts.
        seed: Seed of the random initial states.

    Returns:
        DualReport with gap, divergence defect and flux spread.
    """
    cfg = cfg or SolveConfig()
    primal = sol.primal_energy
    dual = dual_value(sol.theta_hat, sol.sigma_hat, model)
    total = abs(primal + dual)
    norm = lp_norm(sol.sigma_hat.values, sol.mesh, model.p_conj)

    rng = np.random.default_rng(seed)
    amplitude = float(np.max(np.abs(sol.u_hat.values))) or 1.0
    starts: List[np.ndarray] = []
    for _ in range(n_restarts):
        start = amplitude * rng.uniform(-1.0, 1.0, sol.mesh.n_nodes)
        start[sol.mesh.boundary_nodes] = 0.0
        starts.append(start)

    def run(start: np.ndarray) -> VectorField:
        return _restart_flux(sol, model, cfg, start)

    if cfg.threads > 1 and n_restarts > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            fluxes = list(pool.map(run, starts))
    else:
        fluxes = [run(start) for start in starts]
    spread = max((lp_norm(s.values - sol.sigma_hat.values, sol.mesh, model.p_conj)
                  for s in fluxes), default=0.0)
    logger.info("Dual check: gap %.3e, flux spread %.3e over %d restarts",
                total / max(1.0, abs(primal)), spread, n_restarts)

    return DualReport(
        primal_value=primal,
        dual_value=dual,
        gap=total / max(1.0, abs(primal)),
        div_residual=divergence_residual(sol.sigma_hat, sol.f_tilde),
        flux_spread=spread,
        relative_gap=total / abs(primal) if primal != 0 else total,
        flux_norm=norm,
        minmax_value=minmax_value(sol.sigma_hat, model.kappa, model),
        restarts=n_restarts,
    )
