"""Base geometry classes and data structures."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple
import logging
import math

import numpy as np

from .types import ShapeType, GeometryError, GeometryValidationError

logger = logging.getLogger(__name__)

# Reference-element derivatives of the three linear basis functions.
_REF_GRADIENTS = np.array([[-1.0, 1.0, 0.0],
                           [-1.0, 0.0, 1.0]])


@dataclass(frozen=True)
class DomainSpec:
    """Description of a 2D domain and the requested mesh size.

    Parameters are stored as a flat tuple whose meaning depends on ``shape``:
    ``(x0, x1, y0, y1)`` for rectangles, ``(cx, cy, R)`` for disks and
    ``(x1, y1, x2, y2, ...)`` for counterclockwise polygons.
    """
    shape: ShapeType
    parameters: Tuple[float, ...]
    target_h: float

    def __post_init__(self) -> None:
        if not self.target_h > 0:
            raise GeometryValidationError(f"target_h must be positive, got {self.target_h}")
        if self.shape is ShapeType.RECTANGLE:
            if len(self.parameters) != 4:
                raise GeometryValidationError("rectangle needs (x0, x1, y0, y1)")
            x0, x1, y0, y1 = self.parameters
            if not (x0 < x1 and y0 < y1):
                raise GeometryValidationError(
                    f"rectangle requires x0<x1 and y0<y1, got {self.parameters}")
        elif self.shape is ShapeType.DISK:
            if len(self.parameters) != 3:
                raise GeometryValidationError("disk needs (cx, cy, R)")
            if not self.parameters[2] > 0:
                raise GeometryValidationError(f"disk requires R>0, got {self.parameters[2]}")
        elif self.shape is ShapeType.POLYGON:
            if len(self.parameters) < 6 or len(self.parameters) % 2:
                raise GeometryValidationError("polygon needs at least three (x, y) vertices")
            vertices = self.vertices
            if _signed_polygon_area(vertices) <= 0:
                raise GeometryValidationError(
                    "polygon must be counterclockwise with positive area")
            if not _is_simple(vertices):
                raise GeometryValidationError("polygon edges must not intersect")
        else:
            raise GeometryValidationError(f"Unsupported shape: {self.shape}")

    @classmethod
    def rectangle(cls, x0: float, x1: float, y0: float, y1: float,
                  target_h: float) -> "DomainSpec":
        return cls(ShapeType.RECTANGLE, (float(x0), float(x1), float(y0), float(y1)),
                   float(target_h))

    @classmethod
    def disk(cls, cx: float, cy: float, radius: float, target_h: float) -> "DomainSpec":
        return cls(ShapeType.DISK, (float(cx), float(cy), float(radius)), float(target_h))

    @classmethod
    def polygon(cls, vertices: Sequence[Tuple[float, float]],
                target_h: float) -> "DomainSpec":
        flat = tuple(float(v) for vertex in vertices for v in vertex)
        return cls(ShapeType.POLYGON, flat, float(target_h))

    @property
    def vertices(self) -> np.ndarray:
        """Polygon vertices as an (n, 2) array.

        Raises:
            GeometryError: If the domain is not a polygon.
        """
        if self.shape is not ShapeType.POLYGON:
            raise GeometryError("Only polygon domains carry a vertex list")
        return np.asarray(self.parameters, dtype=float).reshape(-1, 2)

    @property
    def area(self) -> float:
        """Exact area of the continuous domain."""
        if self.shape is ShapeType.RECTANGLE:
            x0, x1, y0, y1 = self.parameters
            return (x1 - x0) * (y1 - y0)
        if self.shape is ShapeType.DISK:
            return math.pi * self.parameters[2] ** 2
        return _signed_polygon_area(self.vertices)

    def with_target_h(self, target_h: float) -> "DomainSpec":
        """Return a copy of this domain with a different mesh size."""
        return DomainSpec(self.shape, self.parameters, float(target_h))


def _signed_polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _is_simple(vertices: np.ndarray) -> bool:
    n = len(vertices)
    starts = vertices
    ends = np.roll(vertices, -1, axis=0)
    for i in range(n):
        for j in range(i + 1, n):
            # adjacent edges share a vertex
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(starts[i], ends[i], starts[j], ends[j]):
                return False
    return True


def _segments_cross(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if o1 == 0 and o2 == 0 and o3 == 0 and o4 == 0:
        # collinear: they cross only if their extents overlap
        return all(min(a[k], b[k]) <= max(c[k], d[k]) and min(c[k], d[k]) <= max(a[k], b[k])
                   for k in range(2))
    return (o1 * o2 <= 0) and (o3 * o4 <= 0)


def unique_edges(elements: np.ndarray, n_nodes: int) -> Tuple[np.ndarray, np.ndarray,
                                                                np.ndarray, np.ndarray]:
    """Enumerate the undirected edges of a triangulation.

    Local edge k of an element joins local nodes (k, k+1 mod 3).

    Args:
        elements: (m, 3) connectivity.
        n_nodes: Number of nodes, used to build integer edge keys.

    Returns:
        Tuple ``(edges, inverse, counts, first)``: the (E, 2) sorted edge
        list, the (m, 3) edge id of every local edge, how many elements
        share each edge, and the flat local-edge index of its first use.
    """
    local = np.stack([elements[:, [0, 1]], elements[:, [1, 2]], elements[:, [2, 0]]], axis=1)
    local = np.sort(local.reshape(-1, 2), axis=1).astype(np.int64)
    keys = local[:, 0] * np.int64(n_nodes) + local[:, 1]
    _, first, inverse, counts = np.unique(keys, return_index=True, return_inverse=True,
                                          return_counts=True)
    edges = local[first]
    return edges, inverse.reshape(-1, 3), counts, first


class Mesh:
    """Immutable 2D triangulation with first-order element operators.

    Attributes:
        nodes: (n, 2) nodal coordinates.
        elements: (m, 3) counterclockwise node index triples.
        boundary_nodes: (n,) boolean flag per node.
        areas: (m,) positive element areas.
        grad_maps: (m, 2, 3) maps from the three nodal values of an element
            to its constant gradient.
        domain: The DomainSpec the mesh was built from, if any.
    """

    def __init__(self, nodes: np.ndarray, elements: np.ndarray,
                 domain: Optional[DomainSpec] = None) -> None:
        """Build a mesh and its element operators.

        Args:
            nodes: Nodal coordinates, shape (n, 2).
            elements: Connectivity, shape (m, 3).
            domain: Optional source domain, used when refining curved shapes.

        Raises:
            GeometryValidationError: If arrays are malformed, an element is
                degenerate or inverted, or an edge is shared by more than
                two elements.
        """
        nodes = np.array(nodes, dtype=float)
        elements = np.array(elements, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or len(nodes) < 3:
            raise GeometryValidationError(f"nodes must have shape (n, 2), got {nodes.shape}")
        if elements.ndim != 2 or elements.shape[1] != 3 or len(elements) == 0:
            raise GeometryValidationError(
                f"elements must have shape (m, 3), got {elements.shape}")
        if elements.min() < 0 or elements.max() >= len(nodes):
            raise GeometryValidationError("element references a node that does not exist")

        x0 = nodes[elements[:, 0]]
        jac = np.stack([nodes[elements[:, 1]] - x0, nodes[elements[:, 2]] - x0], axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0):
            bad = int(np.flatnonzero(det <= 0)[0])
            raise GeometryValidationError(
                f"element {bad} has non-positive signed area {0.5 * det[bad]}")

        inv_t = np.transpose(np.linalg.inv(jac), (0, 2, 1))
        grad_maps = inv_t @ _REF_GRADIENTS

        edges, edge_ids, counts, first = unique_edges(elements, len(nodes))
        if np.any(counts > 2):
            raise GeometryValidationError("an edge is shared by more than two elements")
        on_boundary = counts == 1
        boundary_nodes = np.zeros(len(nodes), dtype=bool)
        boundary_nodes[edges[on_boundary].ravel()] = True

        self.nodes = nodes
        self.elements = elements
        self.areas = 0.5 * det
        self.grad_maps = grad_maps
        self.boundary_nodes = boundary_nodes
        self.edges = edges
        self.edge_ids = edge_ids
        self.boundary_edges = edges[on_boundary]
        self.boundary_edge_elements = first[on_boundary] // 3
        self.domain = domain
        edge_vectors = nodes[edges[:, 1]] - nodes[edges[:, 0]]
        self.h = float(np.sqrt(np.max(np.sum(edge_vectors ** 2, axis=1))))
        self.centroids = nodes[elements].mean(axis=1)
        for array in (self.nodes, self.elements, self.areas, self.grad_maps,
                      self.boundary_nodes, self.edges, self.edge_ids, self.boundary_edges,
                      self.boundary_edge_elements, self.centroids):
            array.flags.writeable = False
        logger.debug("Mesh built: %d nodes, %d elements, h=%.4g",
                     self.n_nodes, self.n_elements, self.h)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def total_area(self) -> float:
        """Sum of element areas."""
        return float(np.sum(self.areas))

    @property
    def interior_nodes(self) -> np.ndarray:
        """Indices of nodes that are not on the boundary."""
        return np.flatnonzero(~self.boundary_nodes)

    def bounding_box(self) -> Tuple[float, float, float, float]:
        """Compute the bounding box of the nodes.

        Returns:
            Tuple containing (xmin, xmax, ymin, ymax).
        """
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    def element_gradients(self, nodal_values: np.ndarray) -> np.ndarray:
        """Apply the gradient maps to nodal values, returning (m, 2) gradients."""
        local = np.asarray(nodal_values, dtype=float)[self.elements]
        return np.einsum("mij,mj->mi", self.grad_maps, local)

    def __repr__(self) -> str:
        return f"Mesh(n_nodes={self.n_nodes}, n_elements={self.n_elements}, h={self.h:.4g})"
