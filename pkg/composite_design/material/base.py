"""Two-phase material model: normalization, homogenized coefficient and energy."""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..core.fields.base import ScalarField
from ..core.operations.calculus import gradient, integrate, integrate_product
from .types import MaterialError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class MaterialModel:
    """Physical problem data for a two-phase design.

    Attributes:
        alpha: Conductivity of the scarce phase placed by the design.
        beta: Conductivity of the background phase, ``alpha < beta``.
        p: Growth exponent of the p-Laplacian, ``p > 1``.
        kappa: Area budget for the alpha phase.
    """
    alpha: float
    beta: float
    p: float
    kappa: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise MaterialError(
                f"conductivities must be positive, got alpha={self.alpha}, beta={self.beta}")
        if not self.alpha < self.beta:
            raise MaterialError(
                f"alpha must be smaller than beta, got alpha={self.alpha}, beta={self.beta}")
        if not self.p > 1:
            raise MaterialError(f"p must be greater than 1, got {self.p}")
        if not self.kappa > 0:
            raise MaterialError(f"kappa must be positive, got {self.kappa}")

    @property
    def c(self) -> float:
        """Contrast parameter (beta/alpha)^(1/(p-1)) - 1."""
        return (self.beta / self.alpha) ** (1.0 / (self.p - 1.0)) - 1.0

    @property
    def p_conj(self) -> float:
        """Conjugate exponent p/(p-1)."""
        return self.p / (self.p - 1.0)

    def check_budget(self, domain_area: float) -> None:
        """Reject budgets that do not leave room for the beta phase.

        Raises:
            MaterialError: If ``kappa >= domain_area``.
        """
        if not self.kappa < domain_area:
            raise MaterialError(
                f"kappa must be smaller than the domain area {domain_area:.12g}, got {self.kappa}")


def normalize(alpha: float, beta: float, p: float, f: ScalarField) -> Tuple[float, ScalarField]:
    """Normalize the design problem by beta.

    Args:
        alpha: Conductivity of the scarce phase.
        beta: Conductivity of the background phase.
        p: Exponent.
        f: Nodal load.

    Returns:
        Tuple of the contrast c and the scaled load f/beta.

    Raises:
        MaterialError: If ``alpha >= beta``, a conductivity is not positive
            or ``p <= 1``.
    """
    if not 0 < alpha < beta:
        raise MaterialError(f"need 0 < alpha < beta, got alpha={alpha}, beta={beta}")
    if not p > 1:
        raise MaterialError(f"p must be greater than 1, got {p}")
    c = (beta / alpha) ** (1.0 / (p - 1.0)) - 1.0
    return c, f.with_values(f.values / beta, name=f"{f.name}~" if f.name else "f_tilde")


def _check_theta(theta: np.ndarray) -> None:
    if np.any(theta < 0.0) or np.any(theta > 1.0) or not np.all(np.isfinite(theta)):
        raise MaterialError("theta must take values in [0, 1]")


def homog_coeff(theta: ArrayLike, model: MaterialModel) -> ArrayLike:
    """Effective conductivity of a rank-one laminate with alpha proportion theta.

    Computes (theta*alpha^(1/(1-p)) + (1-theta)*beta^(1/(1-p)))^(1-p), which
    equals beta/(1+c*theta)^(p-1).

    Raises:
        MaterialError: If theta leaves [0, 1].
    """
    values = np.asarray(theta, dtype=float)
    _check_theta(values)
    q = 1.0 / (1.0 - model.p)
    result = (values * model.alpha ** q + (1.0 - values) * model.beta ** q) ** (1.0 - model.p)
    return float(result) if np.ndim(theta) == 0 else result


def state_density(theta: np.ndarray, model: MaterialModel) -> np.ndarray:
    """Normalized conductivity (1 + c*theta)^(1-p) per element."""
    theta = np.asarray(theta, dtype=float)
    _check_theta(theta)
    return (1.0 + model.c * theta) ** (1.0 - model.p)


def perspective_density(xi: np.ndarray, t: ArrayLike, p: float) -> np.ndarray:
    """The jointly convex map (xi, t) -> |xi|^p / t^(p-1) for t > 0."""
    xi = np.asarray(xi, dtype=float)
    return np.linalg.norm(xi, axis=-1) ** p / np.asarray(t, dtype=float) ** (p - 1.0)


def primal_energy(u: ScalarField, theta: ScalarField, f_tilde: ScalarField,
                  model: MaterialModel) -> float:
    """Normalized potential energy of a state u under the design theta.

    Evaluates (1/p) * integral |grad u|^p / (1+c*theta)^(p-1) - <f_tilde, u>,
    with the load term integrated by the lumped nodal rule.

    Raises:
        MaterialError: If theta leaves [0, 1].
    """
    _check_theta(theta.values)
    g = gradient(u).values
    density = perspective_density(g, 1.0 + model.c * theta.values, model.p) / model.p
    return integrate(density, u.mesh) - integrate_product(f_tilde, u)
