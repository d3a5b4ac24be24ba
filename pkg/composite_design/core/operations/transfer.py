"""Transfer of discrete fields between meshes of the same domain."""

import numpy as np
from matplotlib.tri import LinearTriInterpolator, Triangulation
from scipy.interpolate import NearestNDInterpolator

from ..fields.base import ScalarField
from ..geometry.base import Mesh
from .calculus import recover_nodal


def _interpolate(mesh: Mesh, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the P1 function of ``values`` on ``mesh`` at ``points``."""
    triangulation = Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.elements)
    interpolated = LinearTriInterpolator(triangulation, values)(points[:, 0], points[:, 1])
    result = np.ma.filled(np.ma.asarray(interpolated, dtype=float), np.nan)
    outside = np.isnan(result)
    if np.any(outside):
        # Points off the source mesh, e.g. on a finer polygonal circle.
        result[outside] = NearestNDInterpolator(mesh.nodes, values)(points[outside])
    return result


def transfer_nodal(u: ScalarField, mesh: Mesh) -> ScalarField:
    """Piecewise-linear interpolation of a nodal field onto the nodes of another mesh.

    Values are read off the source triangles. Boundary values are reset to
    zero when the source carries the Dirichlet tag.
    """
    values = _interpolate(u.mesh, u.values, mesh.nodes)
    if u.dirichlet:
        values[mesh.boundary_nodes] = 0.0
    return ScalarField(mesh, u.storage, values, u.unit, u.dirichlet, u.name)


def transfer_element(theta: ScalarField, mesh: Mesh) -> ScalarField:
    """Transfer a per-element field through its nodal recovery to new centroids."""
    nodal = recover_nodal(theta.values, theta.mesh)
    values = _interpolate(theta.mesh, nodal, mesh.centroids)
    low, high = float(np.min(theta.values)), float(np.max(theta.values))
    return ScalarField.element(mesh, np.clip(values, low, high), theta.unit, theta.name)
