"""Laminate microstructures realizing a relaxed design.

A design (u, theta) is averaged over squares Q_i of side delta. Each square
is filled with layers of period epsilon normal to zeta_i, with alpha
proportion q_i, and the state is corrected by an oscillating term so that
the laminate energy approaches the homogenized energy.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple
import logging
import math

import numpy as np

from ..core.fields.base import ScalarField
from ..core.geometry.base import Mesh
from ..core.operations.calculus import gradient, integrate
from ..material.base import MaterialModel, homog_coeff
from .profiles import G_eval, H_eval
from .types import LaminationError

logger = logging.getLogger(__name__)

# Mesh size needed per laminate period.
RESOLUTION = 8


@dataclass(frozen=True, eq=False)
class LaminateSpec:
    """Cube partition and per-cube laminate parameters.

    Attributes:
        origin: Lower-left corner of the cube grid.
        delta: Cube side.
        shape: Number of cubes along x and y; cube (ix, iy) has index iy*nx + ix.
        q: Alpha proportion per cube.
        xi: Average gradient per cube.
        zeta: Unit layer normal per cube.
        epsilon: Laminate period.
        fallback_direction: Unit normal used where xi vanishes.
    """
    origin: Tuple[float, float]
    delta: float
    shape: Tuple[int, int]
    q: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    epsilon: float
    fallback_direction: Tuple[float, float] = (1.0, 0.0)

    def __post_init__(self) -> None:
        n = self.shape[0] * self.shape[1]
        if not (self.delta > 0 and self.epsilon > 0):
            raise LaminationError(
                f"delta and epsilon must be positive, got {self.delta}, {self.epsilon}")
        if self.q.shape != (n,) or self.xi.shape != (n, 2) or self.zeta.shape != (n, 2):
            raise LaminationError("per-cube arrays do not match the cube grid")
        if np.any(self.q < 0) or np.any(self.q > 1):
            raise LaminationError("cube proportions must lie in [0, 1]")
        if np.any(np.abs(np.linalg.norm(self.zeta, axis=1) - 1.0) > 1e-12):
            raise LaminationError("layer normals must be unit vectors")

    @property
    def n_cubes(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def margin(self) -> float:
        """Width of the band where neighbouring cube weights blend: min(delta, sqrt(eps delta))."""
        return min(self.delta, math.sqrt(self.epsilon * self.delta))

    def with_epsilon(self, epsilon: float) -> "LaminateSpec":
        return LaminateSpec(self.origin, self.delta, self.shape, self.q, self.xi, self.zeta,
                            float(epsilon), self.fallback_direction)

    def cube_coordinates(self, points: np.ndarray) -> np.ndarray:
        """Integer (ix, iy) of the cube containing each point, clipped to the grid."""
        return _cube_coordinates(points, self.origin, self.delta, self.shape)

    def locate(self, points: np.ndarray) -> np.ndarray:
        return _cube_index(points, self.origin, self.delta, self.shape)

    def coefficients(self, model: MaterialModel) -> np.ndarray:
        """Corrector coefficient per cube.

        (b - a) / (a q + b (1 - q)) with a = alpha^(1/(1-p)), b = beta^(1/(1-p)).
        """
        exponent = 1.0 / (1.0 - model.p)
        a, b = model.alpha ** exponent, model.beta ** exponent
        return (b - a) / (a * self.q + b * (1.0 - self.q))


def _cube_coordinates(points: np.ndarray, origin: Tuple[float, float], delta: float,
                      shape: Tuple[int, int]) -> np.ndarray:
    index = np.floor((points - np.asarray(origin)) / delta).astype(np.int64)
    return np.clip(index, 0, np.asarray(shape) - 1)


def _cube_index(points: np.ndarray, origin: Tuple[float, float], delta: float,
                shape: Tuple[int, int]) -> np.ndarray:
    ij = _cube_coordinates(points, origin, delta, shape)
    return ij[:, 1] * shape[0] + ij[:, 0]


def _grid(mesh: Mesh, delta: float) -> Tuple[Tuple[float, float], Tuple[int, int]]:
    xmin, xmax, ymin, ymax = mesh.bounding_box()
    nx = max(1, int(math.ceil((xmax - xmin) / delta - 1e-9)))
    ny = max(1, int(math.ceil((ymax - ymin) / delta - 1e-9)))
    return (xmin, ymin), (nx, ny)


def laminate_spec_from_fields(theta: ScalarField, u: ScalarField, delta: float, epsilon: float,
                              fallback_direction: Tuple[float, float] = (1.0, 0.0)
                              ) -> LaminateSpec:
    """Average a design over a cube grid covering the mesh bounding box.

    q_i and xi_i are area averages of theta and grad u over the elements
    whose centroid lies in Q_i. The layer normal is xi_i/|xi_i|, or the
    fallback direction where |xi_i| <= 1e-12 * max |xi|.
    """
    mesh = u.mesh
    if theta.is_nodal or theta.mesh is not mesh:
        raise LaminationError("theta must be a per-element field on the mesh of u")
    if not delta > 0:
        raise LaminationError(f"cube size must be positive, got {delta}")
    origin, shape = _grid(mesh, delta)
    cube = _cube_index(mesh.centroids, origin, delta, shape)
    n = shape[0] * shape[1]
    area = np.bincount(cube, weights=mesh.areas, minlength=n)
    filled = area > 0
    safe = np.where(filled, area, 1.0)
    q = np.bincount(cube, weights=mesh.areas * theta.values, minlength=n) / safe
    g = gradient(u).values
    xi = np.column_stack([np.bincount(cube, weights=mesh.areas * g[:, k], minlength=n) / safe
                          for k in range(2)])
    size = np.linalg.norm(xi, axis=1)
    fallback = np.asarray(fallback_direction, dtype=float)
    fallback = fallback / np.linalg.norm(fallback)
    significant = size > 1e-12 * (float(np.max(size)) if size.size else 0.0)
    significant &= size > 0
    zeta = np.where(significant[:, None], xi / np.where(size > 0, size, 1.0)[:, None],
                    fallback[None, :])
    return LaminateSpec(origin, float(delta), shape, np.clip(q, 0.0, 1.0), xi, zeta,
                        float(epsilon), tuple(fallback))


def _bump(t: np.ndarray, lo: float, hi: float, margin: float) -> Tuple[np.ndarray, np.ndarray]:
    """Bump over [lo, hi] and its derivative.

    The bump is 1 on [lo + margin/2, hi - margin/2] and falls to 0 by a cubic
    smoothstep over a band of width margin centred on each end.
    """
    half = 0.5 * margin
    below = np.clip((t - (lo - half)) / margin, 0.0, 1.0)
    above = np.clip(((hi + half) - t) / margin, 0.0, 1.0)
    rise = below ** 2 * (3.0 - 2.0 * below)
    fall = above ** 2 * (3.0 - 2.0 * above)
    rising = rise <= fall
    value = np.where(rising, rise, fall)
    slope = np.where(rising, 6.0 * below * (1.0 - below), -6.0 * above * (1.0 - above)) / margin
    return value, slope


def _cube_weights(spec: LaminateSpec, points: np.ndarray
                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Slot (dy + 1) * 3 + (dx + 1); slot 4 is the cube returned by spec.locate.
    ij = spec.cube_coordinates(points)
    margin = spec.margin
    cubes, bumps, slopes = [], [], []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            cx, cy = ij[:, 0] + dx, ij[:, 1] + dy
            valid = (cx >= 0) & (cx < spec.shape[0]) & (cy >= 0) & (cy < spec.shape[1])
            x_lo = spec.origin[0] + cx * spec.delta
            y_lo = spec.origin[1] + cy * spec.delta
            bx, sx = _bump(points[:, 0], x_lo, x_lo + spec.delta, margin)
            by, sy = _bump(points[:, 1], y_lo, y_lo + spec.delta, margin)
            cubes.append(np.where(valid, cy * spec.shape[0] + cx, -1))
            bumps.append(np.where(valid, bx * by, 0.0))
            slopes.append(np.where(valid[:, None], np.column_stack([sx * by, bx * sy]), 0.0))
    cubes, bumps = np.column_stack(cubes), np.column_stack(bumps)
    slopes = np.stack(slopes, axis=1)
    total = bumps.sum(axis=1)
    weights = bumps / total[:, None]
    total_slope = slopes.sum(axis=1)
    gradients = (slopes - weights[:, :, None] * total_slope[:, None, :]) / total[:, None, None]
    return cubes, weights, gradients


def partition_of_unity(spec: LaminateSpec, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Weights of the cubes neighbouring each point.

    Each cube carries a tensor-product bump equal to 1 on Q_i outside a band
    of width ``spec.margin`` around its boundary; the bumps are normalized
    to sum to 1.

    Returns:
        Tuple (cubes, weights), both (n_points, 9); cubes outside the grid
        get index -1 and weight 0.
    """
    cubes, weights, _ = _cube_weights(spec, points)
    return cubes, weights


def partition_gradients(spec: LaminateSpec, points: np.ndarray) -> np.ndarray:
    """Gradients of the partition-of-unity weights, shape (n_points, 9, 2)."""
    return _cube_weights(spec, points)[2]


def check_resolution(mesh: Mesh, epsilon: float) -> None:
    """Reject meshes that do not resolve the laminate period.

    Raises:
        LaminationError: If mesh.h > epsilon / 8, reporting the required size.
    """
    required = epsilon / RESOLUTION
    if mesh.h > required * (1.0 + 1e-12):
        raise LaminationError(
            f"mesh size {mesh.h:.6g} does not resolve epsilon={epsilon:.6g}; "
            f"need h <= {required:.6g}", required_h=required)


def build_laminate(spec: LaminateSpec, u: ScalarField,
                   model: MaterialModel) -> Tuple[ScalarField, ScalarField]:
    """Realize the laminate and its corrected state on the mesh of u.

    chi = H(q_i, zeta_i . x / epsilon) at element centroids, and
    u_corr = u + epsilon * sum_i psi_i |xi_i| K_i G(q_i, zeta_i . x / epsilon)
    with K_i from ``LaminateSpec.coefficients``.

    Args:
        spec: Laminate parameters.
        u: Nodal state.
        model: Material model.

    Returns:
        Tuple (chi, u_corr) of a per-element indicator and a nodal field.

    Raises:
        LaminationError: If the mesh does not resolve epsilon.
    """
    mesh = u.mesh
    check_resolution(mesh, spec.epsilon)
    if spec.epsilon > spec.delta:
        logger.warning("Laminate period %.3g exceeds the cube size %.3g", spec.epsilon, spec.delta)

    cube = spec.locate(mesh.centroids)
    phase = np.sum(spec.zeta[cube] * mesh.centroids, axis=1) / spec.epsilon
    chi = ScalarField.element(mesh, H_eval(spec.q[cube], phase), name="chi")

    amplitude = spec.epsilon * np.linalg.norm(spec.xi, axis=1) * spec.coefficients(model)
    cubes, weights = partition_of_unity(spec, mesh.nodes)
    correction = np.zeros(mesh.n_nodes)
    for k in range(cubes.shape[1]):
        index = np.maximum(cubes[:, k], 0)
        phase = np.sum(spec.zeta[index] * mesh.nodes, axis=1) / spec.epsilon
        correction += weights[:, k] * amplitude[index] * G_eval(spec.q[index], phase)
    u_corr = ScalarField.nodal(mesh, u.values + correction, u.unit, name="u_corr")
    return chi, u_corr


def corrector_bound(spec: LaminateSpec, model: MaterialModel) -> float:
    """Bound on |u_corr - u|: epsilon * max_i |xi_i| |K_i| q_i (1 - q_i)."""
    size = np.linalg.norm(spec.xi, axis=1) * np.abs(spec.coefficients(model))
    return spec.epsilon * float(np.max(size * spec.q * (1.0 - spec.q)))


def laminate_energy(chi: ScalarField, u_corr: ScalarField, model: MaterialModel) -> float:
    """Integral of (alpha chi + beta (1 - chi)) |grad u_corr|^p."""
    coefficient = model.alpha * chi.values + model.beta * (1.0 - chi.values)
    s = np.linalg.norm(gradient(u_corr).values, axis=1)
    return integrate(coefficient * s ** model.p, chi.mesh)


def layer_fraction(phases: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Exact area fraction of each triangle where H(q, phase) = 1.

    Args:
        phases: Phase values at the three vertices, shape (m, 3); the phase
            is linear on each triangle.
        q: Layer proportion per triangle.

    Returns:
        Fractions in [0, 1], shape (m,).
    """
    phases = np.sort(np.asarray(phases, dtype=float), axis=1)
    q = np.asarray(q, dtype=float)
    a, b, c = phases[:, 0], phases[:, 1], phases[:, 2]
    spread = c - a
    flat = spread <= 1e-12 * (1.0 + np.abs(a))
    low = np.where(flat, 1.0, (b - a) * spread)
    high = np.where(flat, 1.0, spread * (c - b))

    def below(t: np.ndarray) -> np.ndarray:
        # Area fraction where the phase is at most t.
        lower = np.where(b > a, (t - a) ** 2 / np.where(low > 0, low, 1.0), 0.0)
        upper = np.where(c > b, 1.0 - (c - t) ** 2 / np.where(high > 0, high, 1.0), 1.0)
        return np.where(t <= a, 0.0, np.where(t >= c, 1.0, np.where(t <= b, lower, upper)))

    start = np.floor(a)
    fraction = np.zeros_like(a)
    for offset in range(int(np.max(np.floor(c) - start, initial=0.0)) + 1):
        k = start + offset
        fraction += below(k + q) - below(k)
    centre = phases.mean(axis=1)
    fraction = np.where(flat, H_eval(q, centre), fraction)
    return np.clip(fraction, 0.0, 1.0)


def resolved_laminate_energy(spec: LaminateSpec, u: ScalarField, model: MaterialModel) -> float:
    """Laminate energy with the corrector gradient evaluated analytically per element.

    The corrected state has gradient

        grad u + sum_i K_i |xi_i| (epsilon G_i grad psi_i + psi_i (q_i - H_i) zeta_i)

    with G_i and H_i taken at zeta_i . x / epsilon. On each element the smooth
    factors are frozen at the centroid and the layers of the owning cube
    split the element into its exact alpha and beta fractions. Neighbouring
    cubes with the same layers as the owner move with them; the others enter
    through their area fraction.

    Raises:
        LaminationError: If the mesh does not resolve epsilon.
    """
    mesh = u.mesh
    check_resolution(mesh, spec.epsilon)
    centroids = mesh.centroids
    corners = mesh.nodes[mesh.elements]
    amplitude = np.linalg.norm(spec.xi, axis=1) * spec.coefficients(model)
    cubes, weights, gradients = _cube_weights(spec, centroids)

    own = cubes[:, 4]
    q, zeta = spec.q[own], spec.zeta[own]
    fraction = layer_fraction(np.einsum("mvi,mi->mv", corners, zeta) / spec.epsilon, q)
    base = mesh.element_gradients(u.values)
    shift = np.zeros_like(base)
    for k in range(cubes.shape[1]):
        index = np.maximum(cubes[:, k], 0)
        size = weights[:, k] * amplitude[index]
        phase = np.sum(spec.zeta[index] * centroids, axis=1) / spec.epsilon
        base += (spec.epsilon * amplitude[index] * G_eval(spec.q[index], phase))[:, None] \
            * gradients[:, k]
        coherent = (np.abs(spec.q[index] - q) <= 1e-12) \
            & (np.max(np.abs(spec.zeta[index] - zeta), axis=1) <= 1e-12)
        shift += np.where(coherent, size, 0.0)[:, None] * spec.zeta[index]
        other = ~coherent
        if np.any(other):
            layers = layer_fraction(
                np.einsum("mvi,mi->mv", corners[other], spec.zeta[index[other]]) / spec.epsilon,
                spec.q[index[other]])
            base[other] += ((size[other] * (spec.q[index[other]] - layers))[:, None]
                            * spec.zeta[index[other]])

    alpha_part = np.linalg.norm(base + (q - 1.0)[:, None] * shift, axis=1) ** model.p
    beta_part = np.linalg.norm(base + q[:, None] * shift, axis=1) ** model.p
    density = model.alpha * fraction * alpha_part + model.beta * (1.0 - fraction) * beta_part
    return integrate(density, mesh)


def homogenized_energy(theta: ScalarField, u: ScalarField, model: MaterialModel) -> float:
    """Integral of homog_coeff(theta) |grad u|^p."""
    s = np.linalg.norm(gradient(u).values, axis=1)
    return integrate(homog_coeff(theta.values, model) * s ** model.p, u.mesh)


def cell_limit_energy(spec: LaminateSpec, u: ScalarField, model: MaterialModel) -> float:
    """Limit of the laminate energy as epsilon -> 0 at fixed delta.

    Sum over cubes of the integral over Q_i of
    alpha q_i |grad u + (q_i - 1) K_i xi_i|^p + beta (1 - q_i) |grad u + q_i K_i xi_i|^p.
    """
    mesh = u.mesh
    cube = spec.locate(mesh.centroids)
    q = spec.q[cube][:, None]
    shift = (spec.coefficients(model)[:, None] * spec.xi)[cube]
    g = gradient(u).values
    alpha_part = np.linalg.norm(g + (q - 1.0) * shift, axis=1) ** model.p
    beta_part = np.linalg.norm(g + q * shift, axis=1) ** model.p
    density = model.alpha * q[:, 0] * alpha_part + model.beta * (1.0 - q[:, 0]) * beta_part
    return integrate(density, mesh)


def cube_averages(spec: LaminateSpec, chi: ScalarField) -> Tuple[np.ndarray, np.ndarray]:
    """Mean of chi over the mesh part of each cube.

    Returns:
        Tuple (averages, q) restricted to cubes that contain elements.
    """
    mesh = chi.mesh
    cube = spec.locate(mesh.centroids)
    area = np.bincount(cube, weights=mesh.areas, minlength=spec.n_cubes)
    mass = np.bincount(cube, weights=mesh.areas * chi.values, minlength=spec.n_cubes)
    filled = area > 0
    return mass[filled] / area[filled], spec.q[filled]


@dataclass(frozen=True)
class LaminateRow:
    """One entry of the laminate convergence table.

    ``laminate_energy`` is the element-resolved energy; ``sampled_energy``
    integrates the centroid-sampled indicator against the P1 corrected state.
    """
    delta: float
    epsilon: float
    laminate_energy: float
    homogenized_energy: float
    gap: float
    cell_limit_energy: float
    sampled_energy: float
    chi_area: float


def laminate_convergence(theta: ScalarField, u: ScalarField, model: MaterialModel,
                         deltas: Sequence[float], epsilons: Sequence[float]) -> List[LaminateRow]:
    """Tabulate laminate energies over cube sizes and periods.

    Every epsilon must be resolved by the mesh of u. The gap is the
    laminate energy's relative distance to the homogenized energy.

    Returns:
        Rows ordered by delta, then epsilon as given.
    """
    reference = homogenized_energy(theta, u, model)
    rows: List[LaminateRow] = []
    for delta in deltas:
        base = laminate_spec_from_fields(theta, u, delta, max(epsilons))
        limit = cell_limit_energy(base, u, model)
        for epsilon in epsilons:
            spec = base.with_epsilon(epsilon)
            chi, u_corr = build_laminate(spec, u, model)
            energy = resolved_laminate_energy(spec, u, model)
            gap = abs(energy - reference) / abs(reference) if reference else abs(energy)
            rows.append(LaminateRow(float(delta), float(epsilon), energy, reference, gap, limit,
                                    laminate_energy(chi, u_corr, model), integrate(chi)))
            logger.info("delta=%g epsilon=%g: laminate %.10g, homogenized %.10g, gap %.3e",
                        delta, epsilon, energy, reference, gap)
    return rows
