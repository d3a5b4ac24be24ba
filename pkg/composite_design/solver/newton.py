"""Damped Newton minimization of convex element energies.

The discrete energy has the form

    E(u) = sum_T area_T * phi_T(s_T) - b.u + (w/2) * sum_i m_i (u_i - a_i)^2

with s_T = sqrt(|grad u|_T^2 + delta^2), a load vector b, lumped masses m
and an optional proximal anchor a. Only interior nodes are unknowns.

Convergence is measured by the free-node gradient relative to the size of
the forces it balances, |A(u) - b| / (|A(u)| + |b|), where A(u) collects the
element and proximal forces.
"""

from typing import List, Optional, Tuple
import logging

import numpy as np
from scipy.sparse import coo_matrix, diags, identity
from scipy.sparse.linalg import spsolve

from ..core.geometry.base import Mesh
from ..core.operations.calculus import lumped_weights
from ..material.integrand import IntegrandF
from .types import SolveConfig, IterationRecord, ConvergenceError

logger = logging.getLogger(__name__)

# Relative size of the energy roundoff floor used when Armijo cannot resolve a decrease.
_NOISE = 64.0 * np.finfo(float).eps
_MAX_DAMPING = 1e8


class ElementDensity:
    """Energy density phi(s) per element together with its first two derivatives."""

    def value(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError("value() must be implemented by subclasses.")

    def slope(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError("slope() must be implemented by subclasses.")

    def curvature(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError("curvature() must be implemented by subclasses.")

    def secant(self, s: np.ndarray) -> np.ndarray:
        """phi'(s)/s, continued by phi''(0) at s = 0 (infinite when phi'' blows up)."""
        s = np.asarray(s, dtype=float)
        positive = s > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = self.slope(s) / np.where(positive, s, 1.0)
            at_zero = self.curvature(s)
        return np.where(positive, ratio, at_zero)


class PowerDensity(ElementDensity):
    """phi_T(s) = k_T s^p / p with a per-element coefficient k_T."""

    def __init__(self, coefficient: np.ndarray, p: float) -> None:
        self.coefficient = np.asarray(coefficient, dtype=float)
        self.p = float(p)

    def value(self, s: np.ndarray) -> np.ndarray:
        return self.coefficient * s ** self.p / self.p

    def slope(self, s: np.ndarray) -> np.ndarray:
        return self.coefficient * s ** (self.p - 1.0)

    def curvature(self, s: np.ndarray) -> np.ndarray:
        return self.coefficient * (self.p - 1.0) * s ** (self.p - 2.0)


class IntegrandDensity(ElementDensity):
    """phi(s) = F_eps(s), the same on every element."""

    def __init__(self, integrand: IntegrandF) -> None:
        self.integrand = integrand

    def value(self, s: np.ndarray) -> np.ndarray:
        return self.integrand.value(s)

    def slope(self, s: np.ndarray) -> np.ndarray:
        return self.integrand.slope(s)

    def curvature(self, s: np.ndarray) -> np.ndarray:
        return self.integrand.curvature(s)


class DiscreteEnergy:
    """Assembled energy, gradient and Hessian on the interior nodes of a mesh."""

    def __init__(self, mesh: Mesh, density: ElementDensity, load: np.ndarray,
                 delta: float = 0.0, hessian_floor: float = 1e-10,
                 anchor: Optional[np.ndarray] = None, proximal_weight: float = 0.0) -> None:
        self.mesh = mesh
        self.density = density
        self.load = np.asarray(load, dtype=float)
        self.delta = float(delta)
        self.hessian_floor = float(hessian_floor)
        self.free = mesh.interior_nodes
        self.proximal_weight = float(proximal_weight)
        self.masses = lumped_weights(mesh) if proximal_weight > 0 else None
        self.anchor = None if anchor is None else np.asarray(anchor, dtype=float)
        # COO pattern of the element Hessians, fixed for the mesh.
        local = mesh.elements
        self._rows = np.repeat(local, 3, axis=1).ravel()
        self._cols = np.tile(local, (1, 3)).ravel()

    def _magnitudes(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        g = self.mesh.element_gradients(u)
        s = np.sqrt(np.sum(g ** 2, axis=1) + self.delta ** 2)
        return g, s

    def _safe(self, s: np.ndarray) -> np.ndarray:
        scale = float(np.max(s)) if s.size else 0.0
        return np.maximum(s, max(1e-12 * scale, 1e-150))

    def value(self, u: np.ndarray) -> float:
        _, s = self._magnitudes(u)
        energy = float(np.dot(self.mesh.areas, self.density.value(s))) - float(np.dot(self.load, u))
        if self.proximal_weight > 0:
            energy += 0.5 * self.proximal_weight * float(np.dot(self.masses, (u - self.anchor) ** 2))
        return energy

    def forces(self, u: np.ndarray) -> np.ndarray:
        """Nodal internal forces A(u): element terms plus the proximal term."""
        g, s = self._magnitudes(u)
        weight = self.mesh.areas * self.density.slope(s) / self._safe(s)
        local = weight[:, None] * np.einsum("mki,mk->mi", self.mesh.grad_maps, g)
        internal = np.bincount(self.mesh.elements.ravel(), weights=local.ravel(),
                               minlength=self.mesh.n_nodes)
        if self.proximal_weight > 0:
            internal += self.proximal_weight * self.masses * (u - self.anchor)
        return internal

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """Full nodal gradient of the energy (boundary entries included)."""
        return self.forces(u) - self.load

    def hessian(self, u: np.ndarray):
        """Sparse Hessian restricted to the free nodes, with floored curvatures."""
        g, s = self._magnitudes(u)
        s_safe = self._safe(s)
        normal = g / s_safe[:, None]
        radial = np.maximum(self.density.curvature(s_safe), self.hessian_floor)
        tangential = self.density.secant(np.where(s > 0, s_safe, 0.0))
        tangential = np.maximum(np.where(np.isfinite(tangential), tangential, 0.0),
                                self.hessian_floor)
        tensor = (tangential[:, None, None] * np.eye(2)[None]
                  + (radial - tangential)[:, None, None] * np.einsum("mi,mj->mij", normal, normal))
        element = np.einsum("mki,mkl,mlj->mij", self.mesh.grad_maps, tensor, self.mesh.grad_maps)
        element *= self.mesh.areas[:, None, None]
        n = self.mesh.n_nodes
        matrix = coo_matrix((element.ravel(), (self._rows, self._cols)), shape=(n, n)).tocsr()
        if self.proximal_weight > 0:
            matrix = matrix + diags(self.proximal_weight * self.masses, format="csr")
        return matrix[self.free][:, self.free]

    def free_gradient(self, u: np.ndarray) -> Tuple[np.ndarray, float]:
        """Free-node gradient and its norm relative to |A(u)| + |b| on the free nodes."""
        internal = self.forces(u)[self.free]
        load = self.load[self.free]
        grad = internal - load
        scale = float(np.linalg.norm(internal) + np.linalg.norm(load))
        norm = float(np.linalg.norm(grad))
        return grad, (norm / scale if scale > 0 else norm)

    def residual(self, u: np.ndarray) -> float:
        """Relative free-node gradient norm."""
        return self.free_gradient(u)[1]


def newton_minimize(energy: DiscreteEnergy, u0: np.ndarray, cfg: SolveConfig,
                    history: Optional[List[IterationRecord]] = None,
                    start_iteration: int = 0) -> Tuple[np.ndarray, int]:
    """Minimize a convex discrete energy by damped Newton with Armijo backtracking.

    Boundary values of ``u0`` are kept fixed. When backtracking cannot find
    an acceptable step the Hessian is shifted by a growing multiple of its
    mean diagonal; the shift relaxes again after successful steps. Below
    ``cfg.stall_tol`` an iterate counts as converged once no step decreases
    the energy or a full step under the energy resolution fails to halve
    the residual.

    Args:
        energy: The assembled energy.
        u0: Starting nodal values.
        cfg: Tolerances and limits.
        history: Optional list that receives one record per accepted step.
        start_iteration: Offset for iteration numbers in the history.

    Returns:
        Tuple of the minimizer and the number of iterations used.

    Raises:
        ConvergenceError: If the tolerance is not met within ``cfg.max_iter``
            iterations or no descent step can be found.
    """
    u = np.array(u0, dtype=float)
    free = energy.free
    history = history if history is not None else []
    stall_tol = max(cfg.stall_tol, cfg.newton_tol)
    damping = 0.0
    value = energy.value(u)
    for iteration in range(cfg.max_iter):
        grad, residual = energy.free_gradient(u)
        if residual <= cfg.newton_tol or free.size == 0:
            logger.debug("Newton converged after %d iterations, residual %.3e",
                         iteration, residual)
            return u, iteration

        hessian = energy.hessian(u)
        scale = float(hessian.diagonal().mean())
        accepted = False
        while not accepted:
            system = hessian if damping == 0 else hessian + damping * scale * identity(
                free.size, format="csr")
            direction = spsolve(system.tocsc(), -grad)
            slope = float(np.dot(grad, direction))
            noise = _NOISE * (1.0 + abs(value))
            if np.all(np.isfinite(direction)) and slope < 0:
                step = 1.0
                while step >= cfg.min_step:
                    trial = u.copy()
                    trial[free] += step * direction
                    trial_value = energy.value(trial)
                    if trial_value <= value + cfg.armijo_c * step * slope:
                        accepted = True
                        break
                    step *= 0.5
                if not accepted and -slope <= noise:
                    # Decrease below energy resolution: take the full step.
                    step = 1.0
                    trial = u.copy()
                    trial[free] += direction
                    trial_value = energy.value(trial)
                    accepted = trial_value <= value + noise
            if not accepted:
                if residual <= stall_tol:
                    logger.debug("No descent step at residual %.3e after %d iterations",
                                 residual, iteration)
                    return u, iteration
                damping = max(10.0 * damping, 1e-8)
                logger.debug("Line search failed, damping raised to %.1e", damping)
                if damping > _MAX_DAMPING:
                    raise ConvergenceError(
                        f"no descent step found at iteration {iteration}, residual {residual:.3e}",
                        last_iterate=u, history=history, residual=residual)

        below_noise = -slope <= noise
        if below_noise and residual <= stall_tol:
            trial_residual = energy.residual(trial)
            if trial_residual > 0.5 * residual:
                # Steps no longer reduce the gradient: roundoff floor reached.
                logger.debug("Newton stalled at residual %.3e after %d iterations",
                             min(residual, trial_residual), iteration + 1)
                return (trial if trial_residual < residual else u), iteration + 1

        u, value = trial, trial_value
        damping = 0.0 if damping <= 1e-8 else damping / 10.0
        if cfg.record_history:
            history.append(IterationRecord(start_iteration + iteration + 1, value,
                                           energy.residual(u), step))
        logger.debug("Newton %d: energy %.15g, step %.3g", iteration + 1, value, step)

    residual = energy.residual(u)
    if residual <= cfg.newton_tol:
        return u, cfg.max_iter
    raise ConvergenceError(
        f"Newton did not converge in {cfg.max_iter} iterations, residual {residual:.3e}",
        last_iterate=u, history=history, residual=residual)
