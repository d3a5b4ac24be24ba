"""Closed-form optimal design on a disk with constant load."""

from dataclasses import dataclass
from typing import Tuple, Union
import math

import numpy as np

from ..core.fields.base import ScalarField, VectorField
from ..core.geometry.base import Mesh
from ..material.base import MaterialModel

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class RadialOracle:
    """Radially symmetric optimal design for -div sigma = f/beta on a disk.

    The flux is sigma = -(f/beta) r / 2 e_r. The alpha phase occupies the
    outer annulus r > r0 of area kappa and the threshold on |sigma| is
    t_hat = |sigma|(r0).

    Attributes:
        radius: Disk radius R.
        model: Material model.
        load: Constant load f > 0.
        center: Disk center.
    """
    radius: float
    model: MaterialModel
    load: float
    center: Tuple[float, float] = (0.0, 0.0)

    @property
    def f_tilde(self) -> float:
        return self.load / self.model.beta

    @property
    def r0(self) -> float:
        """Radius of the inner beta disk, sqrt(R^2 - kappa/pi)."""
        return math.sqrt(self.radius ** 2 - self.model.kappa / math.pi)

    @property
    def t_hat(self) -> float:
        return self.f_tilde * self.r0 / 2.0

    @property
    def mu_hat(self) -> float:
        return self.t_hat ** (1.0 / (self.model.p - 1.0))

    def sigma_magnitude(self, r: ArrayLike) -> ArrayLike:
        return self.f_tilde * np.asarray(r, dtype=float) / 2.0

    def theta(self, r: ArrayLike) -> ArrayLike:
        return np.where(np.asarray(r, dtype=float) > self.r0, 1.0, 0.0)

    def grad_u_magnitude(self, r: ArrayLike) -> ArrayLike:
        """(1 + c theta) |sigma|^(1/(p-1))."""
        scale = 1.0 + self.model.c * self.theta(r)
        return scale * self.sigma_magnitude(r) ** (1.0 / (self.model.p - 1.0))

    def _primitive(self, a: ArrayLike, b: ArrayLike) -> ArrayLike:
        # Integral of (f_tilde rho / 2)^(1/(p-1)) over [a, b].
        q = self.model.p_conj
        return (self.f_tilde / 2.0) ** (1.0 / (self.model.p - 1.0)) * (b ** q - a ** q) / q

    def u(self, r: ArrayLike) -> ArrayLike:
        """State obtained by integrating |grad u| inward from u(R) = 0."""
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.radius)
        outer = (1.0 + self.model.c) * self._primitive(np.maximum(r, self.r0), self.radius)
        inner = self._primitive(np.minimum(r, self.r0), self.r0)
        return outer + inner

    def dual_energy(self) -> float:
        """(1/p') times the integral of (1 + c theta) |sigma|^p' over the disk."""
        q = self.model.p_conj
        inner = self.r0 ** (q + 2.0)
        outer = (1.0 + self.model.c) * (self.radius ** (q + 2.0) - inner)
        return 2.0 * math.pi / q * (self.f_tilde / 2.0) ** q * (inner + outer) / (q + 2.0)

    def primal_energy(self) -> float:
        return -self.dual_energy()

    def sample(self, mesh: Mesh) -> Tuple[ScalarField, ScalarField, VectorField]:
        """Oracle state at the nodes, design and flux at the centroids of a mesh."""
        center = np.asarray(self.center, dtype=float)
        nodes = mesh.nodes - center
        u = self.u(np.linalg.norm(nodes, axis=1))
        u[mesh.boundary_nodes] = 0.0
        offsets = mesh.centroids - center
        theta = self.theta(np.linalg.norm(offsets, axis=1))
        return (ScalarField.nodal(mesh, u, dirichlet=True, name="u"),
                ScalarField.element(mesh, theta, name="theta"),
                VectorField(mesh, -self.f_tilde / 2.0 * offsets, name="sigma"))


def radial_oracle(R: float, model: MaterialModel, f_const: float,
                  center: Tuple[float, float] = (0.0, 0.0)) -> RadialOracle:
    """Build the disk oracle.

    Args:
        R: Disk radius.
        model: Material model; kappa must be smaller than pi R^2.
        f_const: Constant load.
        center: Disk center.

    Returns:
        RadialOracle.

    Raises:
        ValueError: If R or f_const is not positive.
        MaterialError: If kappa >= pi R^2.
    """
    if not R > 0:
        raise ValueError(f"disk radius must be positive, got {R}")
    if not f_const > 0:
        raise ValueError(f"the oracle needs a positive constant load, got {f_const}")
    model.check_budget(math.pi * R ** 2)
    return RadialOracle(float(R), model, float(f_const), tuple(center))
