"""Mesh generators for the supported domain shapes."""

from typing import Dict, Optional, Sequence, Tuple, Type
import logging
import math

import numpy as np
from matplotlib.path import Path
from scipy.spatial import Delaunay

from .base import DomainSpec, Mesh, unique_edges
from .types import ShapeType, GeometryError, GeometryValidationError

logger = logging.getLogger(__name__)

# Slack used when turning a length ratio into a subdivision count.
_COUNT_SLACK = 1e-9


def _divisions(length: float, target_h: float) -> int:
    return max(1, int(math.ceil(length / target_h - _COUNT_SLACK)))


class Domain:
    """Abstract domain base class; subclasses know how to triangulate themselves."""

    def __init__(self) -> None:
        self._spec: Optional[DomainSpec] = None
        self._mesh: Optional[Mesh] = None

    @property
    def spec(self) -> DomainSpec:
        """Get the domain specification."""
        if self._spec is None:
            raise GeometryError("Domain specification not initialized")
        return self._spec

    def to_mesh(self) -> Mesh:
        """Triangulate the domain, caching the result.

        Returns:
            The Mesh for this domain.
        """
        if self._mesh is None:
            nodes, elements = self._create_mesh()
            self._mesh = Mesh(nodes, _orient_counterclockwise(nodes, elements), self.spec)
            logger.info("Meshed %s: %d nodes, %d elements, area %.12g",
                        self.spec.shape.name.lower(), self._mesh.n_nodes,
                        self._mesh.n_elements, self._mesh.total_area)
        return self._mesh

    def _create_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Create nodes and connectivity from the domain parameters.

        Raises:
            NotImplementedError: Must be implemented by subclasses.
        """
        raise NotImplementedError("_create_mesh() must be implemented by subclasses.")


class Rectangle(Domain):
    """Axis-aligned rectangle meshed as a structured grid with diagonal split."""

    def __init__(self, x0: float, x1: float, y0: float, y1: float, target_h: float) -> None:
        super().__init__()
        self._spec = DomainSpec.rectangle(x0, x1, y0, y1, target_h)

    def _create_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        x0, x1, y0, y1 = self.spec.parameters
        nx = _divisions(x1 - x0, self.spec.target_h)
        ny = _divisions(y1 - y0, self.spec.target_h)
        xs = np.linspace(x0, x1, nx + 1)
        ys = np.linspace(y0, y1, ny + 1)
        gx, gy = np.meshgrid(xs, ys)
        nodes = np.column_stack([gx.ravel(), gy.ravel()])

        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        n00 = (j * (nx + 1) + i).ravel()
        n10 = n00 + 1
        n01 = n00 + nx + 1
        n11 = n01 + 1
        lower = np.column_stack([n00, n10, n11])
        upper = np.column_stack([n00, n11, n01])
        elements = np.stack([lower, upper], axis=1).reshape(-1, 3)
        return nodes, elements


class Disk(Domain):
    """Disk approximated by concentric rings of nodes on inscribed polygons.

    Ring k (k = 1..K) carries 6k nodes on the circle of radius kR/K, so the
    outer ring lies exactly on the boundary circle.
    """

    def __init__(self, cx: float, cy: float, radius: float, target_h: float) -> None:
        super().__init__()
        self._spec = DomainSpec.disk(cx, cy, radius, target_h)

    def _create_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        cx, cy, radius = self.spec.parameters
        rings = _divisions(radius, self.spec.target_h)
        coords = [np.array([[cx, cy]])]
        offsets = [0]
        for k in range(1, rings + 1):
            angles = 2.0 * np.pi * np.arange(6 * k) / (6 * k)
            r = radius * k / rings
            coords.append(np.column_stack([cx + r * np.cos(angles), cy + r * np.sin(angles)]))
            offsets.append(offsets[-1] + (1 if k == 1 else 6 * (k - 1)))
        nodes = np.vstack(coords)

        triangles = []
        first = np.arange(6) + 1
        for j in range(6):
            triangles.append((0, first[j], first[(j + 1) % 6]))
        for k in range(2, rings + 1):
            triangles.extend(_zip_rings(offsets[k - 1], 6 * (k - 1), offsets[k], 6 * k))
        return nodes, np.array(triangles, dtype=np.int64)


def _zip_rings(inner_start: int, n_inner: int, outer_start: int, n_outer: int) -> list:
    """Triangulate the band between two concentric rings by advancing in angle."""
    triangles = []
    i = j = 0
    while i < n_inner or j < n_outer:
        next_inner = (i + 1) / n_inner
        next_outer = (j + 1) / n_outer
        a = inner_start + i % n_inner
        b = outer_start + j % n_outer
        if j < n_outer and (i == n_inner or next_outer <= next_inner + 1e-12):
            triangles.append((a, b, outer_start + (j + 1) % n_outer))
            j += 1
        else:
            triangles.append((a, b, inner_start + (i + 1) % n_inner))
            i += 1
    return triangles


class Polygon(Domain):
    """Simple counterclockwise polygon meshed by Delaunay triangulation.

    Boundary edges are subdivided to the target size and interior points
    are placed on a grid, keeping half a cell away from the boundary.
    """

    def __init__(self, vertices: Sequence[Tuple[float, float]], target_h: float) -> None:
        super().__init__()
        self._spec = DomainSpec.polygon(vertices, target_h)

    def _create_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        h = self.spec.target_h
        vertices = self.spec.vertices
        ends = np.roll(vertices, -1, axis=0)
        boundary = []
        for start, end in zip(vertices, ends):
            n = _divisions(float(np.linalg.norm(end - start)), h)
            t = np.arange(n)[:, None] / n
            boundary.append(start + t * (end - start))
        boundary = np.vstack(boundary)

        lo, hi = vertices.min(axis=0), vertices.max(axis=0)
        nx, ny = _divisions(hi[0] - lo[0], h), _divisions(hi[1] - lo[1], h)
        gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], nx + 1), np.linspace(lo[1], hi[1], ny + 1))
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        outline = Path(vertices)
        inside = outline.contains_points(grid)
        grid = grid[inside]
        if len(grid):
            grid = grid[_distance_to_segments(grid, vertices, ends) >= 0.5 * h]
        points = np.vstack([boundary, grid])

        triangulation = Delaunay(points)
        elements = triangulation.simplices
        centroids = points[elements].mean(axis=1)
        elements = elements[outline.contains_points(centroids)]
        if len(elements) == 0:
            raise GeometryValidationError("polygon produced an empty triangulation")
        used, elements = np.unique(elements, return_inverse=True)
        return points[used], elements.reshape(-1, 3)


def _distance_to_segments(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    seg = ends - starts
    rel = points[:, None, :] - starts[None, :, :]
    t = np.clip(np.sum(rel * seg[None], axis=2) / np.sum(seg ** 2, axis=1)[None], 0.0, 1.0)
    nearest = starts[None] + t[..., None] * seg[None]
    return np.min(np.linalg.norm(points[:, None, :] - nearest, axis=2), axis=1)


def _orient_counterclockwise(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    elements = np.array(elements, dtype=np.int64)
    p0, p1, p2 = (nodes[elements[:, k]] for k in range(3))
    det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    flip = det < 0
    elements[flip] = elements[flip][:, [0, 2, 1]]
    return elements


_DOMAIN_TYPES: Dict[ShapeType, Type[Domain]] = {
    ShapeType.RECTANGLE: Rectangle,
    ShapeType.DISK: Disk,
    ShapeType.POLYGON: Polygon,
}


def domain_from_spec(spec: DomainSpec) -> Domain:
    """Instantiate the Domain subclass matching a specification."""
    if spec.shape is ShapeType.POLYGON:
        return Polygon([tuple(v) for v in spec.vertices], spec.target_h)
    return _DOMAIN_TYPES[spec.shape](*spec.parameters, spec.target_h)


def build_mesh(domain: DomainSpec) -> Mesh:
    """Triangulate a domain.

    Args:
        domain: The domain and requested mesh size.

    Returns:
        A conforming Mesh. Disks are approximated by an inscribed polygon
        whose boundary vertices lie on the circle.

    Raises:
        GeometryValidationError: If the domain is degenerate.
    """
    if domain.area <= 0:
        raise GeometryValidationError("domain has zero area")
    return domain_from_spec(domain).to_mesh()


def refine(mesh: Mesh) -> Mesh:
    """Split every triangle into four similar triangles at edge midpoints.

    Boundary midpoints of disk meshes are projected back onto the circle.

    Args:
        mesh: The mesh to refine.

    Returns:
        A new Mesh with four times as many elements.
    """
    edges, edge_ids, counts, _ = unique_edges(mesh.elements, mesh.n_nodes)
    midpoints = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    domain = mesh.domain
    if domain is not None and domain.shape is ShapeType.DISK:
        cx, cy, radius = domain.parameters
        outer = counts == 1
        offset = midpoints[outer] - np.array([cx, cy])
        midpoints[outer] = np.array([cx, cy]) + radius * offset / np.linalg.norm(
            offset, axis=1, keepdims=True)
    nodes = np.vstack([mesh.nodes, midpoints])

    a, b, c = mesh.elements[:, 0], mesh.elements[:, 1], mesh.elements[:, 2]
    ab, bc, ca = (mesh.n_nodes + edge_ids[:, k] for k in range(3))
    children = np.stack([
        np.column_stack([a, ab, ca]),
        np.column_stack([ab, b, bc]),
        np.column_stack([ca, bc, c]),
        np.column_stack([ab, bc, ca]),
    ], axis=1).reshape(-1, 3)
    refined = Mesh(nodes, children, None if domain is None else domain.with_target_h(
        0.5 * domain.target_h))
    logger.debug("Refined %r -> %r", mesh, refined)
    return refined
