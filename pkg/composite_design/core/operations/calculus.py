"""Discrete calculus on first-order triangular elements."""

from typing import Union

import numpy as np

from ..fields.base import ScalarField, VectorField
from ..fields.types import StorageKind, FieldError
from ..geometry.base import Mesh


def gradient(u: ScalarField) -> VectorField:
    """Per-element constant gradient of a nodal field.

    Args:
        u: Nodal scalar field.

    Returns:
        VectorField of element gradients.

    Raises:
        FieldError: If ``u`` is not nodal.
    """
    if not u.is_nodal:
        raise FieldError("gradient needs a nodal field")
    return VectorField(u.mesh, u.mesh.element_gradients(u.values), name=f"grad {u.name}".strip())


def integrate(g: Union[ScalarField, np.ndarray], mesh: Mesh = None) -> float:
    """Integrate a per-element field: sum of value times element area.

    Args:
        g: Per-element field, or a raw per-element array together with ``mesh``.
        mesh: Mesh for raw arrays.

    Returns:
        The integral over the mesh.
    """
    if isinstance(g, ScalarField):
        if g.is_nodal:
            raise FieldError("integrate needs a per-element field")
        mesh, values = g.mesh, g.values
    else:
        values = np.asarray(g, dtype=float)
    return float(np.dot(values, mesh.areas))


def lumped_weights(mesh: Mesh) -> np.ndarray:
    """Nodal area shares: each element gives a third of its area to each vertex."""
    return np.bincount(mesh.elements.ravel(), weights=np.repeat(mesh.areas / 3.0, 3),
                       minlength=mesh.n_nodes)


def load_vector(f: ScalarField) -> np.ndarray:
    """Lumped load: nodal value of f times the nodal area share."""
    if not f.is_nodal:
        raise FieldError("the load must be a nodal field")
    return f.values * lumped_weights(f.mesh)


def integrate_product(f: ScalarField, u: ScalarField) -> float:
    """Lumped approximation of the integral of f times u for nodal fields."""
    return float(np.dot(load_vector(f), u.values))


def recover_nodal(values: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Area-weighted average of per-element values onto the nodes.

    Args:
        values: Per-element values, shape (m,) or (m, k).
        mesh: The mesh.

    Returns:
        Nodal values with the trailing shape of ``values``.
    """
    values = np.asarray(values, dtype=float)
    weights = np.repeat(mesh.areas, 3)
    nodes = mesh.elements.ravel()
    total = np.bincount(nodes, weights=weights, minlength=mesh.n_nodes)
    if values.ndim == 1:
        return np.bincount(nodes, weights=weights * np.repeat(values, 3),
                           minlength=mesh.n_nodes) / total
    columns = [np.bincount(nodes, weights=weights * np.repeat(values[:, k], 3),
                           minlength=mesh.n_nodes) / total for k in range(values.shape[1])]
    return np.column_stack(columns)


def recovered_gradient(values: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Element gradients of the nodal recovery of per-element values.

    Returns:
        Shape (m, 2) for scalar input, (m, k, 2) for (m, k) input.
    """
    nodal = recover_nodal(values, mesh)
    if nodal.ndim == 1:
        return mesh.element_gradients(nodal)
    return np.stack([mesh.element_gradients(nodal[:, k]) for k in range(nodal.shape[1])], axis=1)


def lp_norm(values: np.ndarray, mesh: Mesh, p: float) -> float:
    """L^p norm of a per-element scalar or vector field."""
    values = np.asarray(values, dtype=float)
    magnitude = np.abs(values) if values.ndim == 1 else np.linalg.norm(values, axis=1)
    return float(np.dot(mesh.areas, magnitude ** p) ** (1.0 / p))


def to_element(u: ScalarField) -> ScalarField:
    """Element averages of a nodal field."""
    if u.storage is StorageKind.ELEMENT:
        return u
    return ScalarField.element(u.mesh, u.values[u.mesh.elements].mean(axis=1), u.unit, u.name)
