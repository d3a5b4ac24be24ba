"""Pointwise optimality conditions linking the design to the state."""

import numpy as np

from ..core.fields.base import ScalarField
from ..core.operations.calculus import gradient
from ..material.base import MaterialModel
from .types import DesignError, DesignSolution


def theta_from_magnitudes(s: np.ndarray, mu: float, c: float) -> np.ndarray:
    """Optimal proportion for gradient magnitudes s at the threshold mu > 0.

    Returns 0 on [0, mu), (s/mu - 1)/c on [mu, (1+c)mu) and 1 beyond.
    """
    s = np.asarray(s, dtype=float)
    middle = (s / mu - 1.0) / c
    return np.where(s < mu, 0.0, np.where(s < (1.0 + c) * mu, middle, 1.0))


def theta_from_u(u: ScalarField, mu: float, model: MaterialModel) -> ScalarField:
    """Recover the optimal design from a state at the multiplier mu.

    Args:
        u: Nodal state.
        mu: Multiplier, > 0.
        model: Material model.

    Returns:
        Per-element proportion field in [0, 1].

    Raises:
        DesignError: If ``mu <= 0``; the mu = 0 branch is handled separately.
    """
    if not mu > 0:
        raise DesignError(f"theta_from_u needs mu > 0, got {mu}")
    s = np.linalg.norm(gradient(u).values, axis=1)
    return ScalarField.element(u.mesh, theta_from_magnitudes(s, mu, model.c), name="theta")


def theta_for_budget(s: np.ndarray, areas: np.ndarray, kappa: float, c: float,
                     rel_tol: float = 1e-13) -> np.ndarray:
    """Best design for fixed gradient magnitudes under the area budget.

    Bisects the threshold of ``theta_from_magnitudes`` so that the design
    uses the budget exactly, or returns the all-alpha design where the
    gradient is nonzero when that already fits.
    """
    s = np.asarray(s, dtype=float)
    if float(np.dot(areas, s > 0)) <= kappa:
        return (s > 0).astype(float)
    lo, hi = 0.0, float(np.max(s))
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if float(np.dot(areas, theta_from_magnitudes(s, mid, c))) > kappa:
            lo = mid
        else:
            hi = mid
    return theta_from_magnitudes(s, hi, c)


def kkt_residual(sol: DesignSolution, model: MaterialModel, tol: float = 0.0) -> float:
    """Defect of the variational inequality characterizing an optimal design.

    Per element g = mu^p - |grad u|^p / (1+c theta)^p. Where theta < 1 the
    design could grow, so g >= -tol is required; where theta > 0 it could
    shrink, so g <= tol is required. The residual is the largest violation
    weighted by element area, plus |mu * (volume - kappa)|.

    Args:
        sol: A design solution.
        model: Material model.
        tol: Slack allowed before a violation counts.

    Returns:
        Non-negative residual.
    """
    theta = sol.theta_hat.values
    s = np.linalg.norm(gradient(sol.u_hat).values, axis=1)
    g = sol.mu_hat ** model.p - (s / (1.0 + model.c * theta)) ** model.p
    grow = np.where(theta < 1.0, np.maximum(0.0, -g - tol), 0.0)
    shrink = np.where(theta > 0.0, np.maximum(0.0, g - tol), 0.0)
    violation = float(np.max(sol.mesh.areas * (grow + shrink), initial=0.0))
    return violation + abs(sol.mu_hat * (sol.volume - model.kappa))
