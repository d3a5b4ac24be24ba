"""Numerical checks of flux regularity and of the structure of optimal designs."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging

import numpy as np

from ..core.fields.base import ScalarField, VectorField
from ..core.geometry.base import Mesh
from ..core.geometry.types import ShapeType
from ..core.operations.calculus import gradient, recovered_gradient
from ..material.base import MaterialModel

logger = logging.getLogger(__name__)


def _scaled_flux(sigma: VectorField, exponent: float) -> np.ndarray:
    """|sigma|^exponent sigma, zero where sigma vanishes."""
    magnitude = np.linalg.norm(sigma.values, axis=1)
    factor = np.zeros_like(magnitude)
    positive = magnitude > 0
    factor[positive] = magnitude[positive] ** exponent
    return factor[:, None] * sigma.values


def _h1_seminorm(jacobians: np.ndarray, mesh: Mesh) -> float:
    return float(np.sqrt(np.dot(mesh.areas, np.sum(jacobians ** 2, axis=(1, 2)))))


def flux_h1_seminorm(sigma: VectorField, r_exp: float) -> float:
    """Discrete H^1 seminorm of |sigma|^r_exp sigma.

    The field is recovered at the nodes by area-weighted averaging and
    differentiated elementwise.

    Raises:
        ValueError: If ``r_exp <= -1/2``.
    """
    if not r_exp > -0.5:
        raise ValueError(f"r_exp must be greater than -1/2, got {r_exp}")
    jacobians = recovered_gradient(_scaled_flux(sigma, r_exp), sigma.mesh)
    return _h1_seminorm(jacobians, sigma.mesh)


@dataclass(frozen=True, eq=False)
class CommutatorReport:
    """Commutator eta = d1 theta sigma2 - d2 theta sigma1 and its norms.

    Attributes:
        eta: Per-element commutator.
        l2: L^2 norm over the mesh.
        off_band: L^2 norm away from the level set |sigma| = t_hat.
        on_band: L^2 norm on the band around that level set.
        band_tol: Half-width of the band in |sigma|.
    """
    eta: ScalarField
    l2: float
    off_band: float
    on_band: float
    band_tol: float


def _l2(values: np.ndarray, mesh: Mesh, mask: Optional[np.ndarray] = None) -> float:
    weights = mesh.areas if mask is None else mesh.areas * mask
    return float(np.sqrt(np.dot(weights, values ** 2)))


def default_band_tol(sigma: VectorField) -> float:
    """2 h max |grad |sigma||, with grad |sigma| from the nodal recovery."""
    magnitude = np.linalg.norm(sigma.values, axis=1)
    slope = np.linalg.norm(recovered_gradient(magnitude, sigma.mesh), axis=1)
    return 2.0 * sigma.mesh.h * float(np.max(slope))


def theta_sigma_commutator(theta: ScalarField, sigma: VectorField, t_hat: float,
                           band_tol: Optional[float] = None) -> CommutatorReport:
    """Compare the design gradient with the flux direction.

    Where the design varies it must vary across flux lines, so eta vanishes
    off the level set |sigma| = t_hat.

    Args:
        theta: Per-element design.
        sigma: Per-element flux on the same mesh.
        t_hat: Flux threshold of the design.
        band_tol: Half-width of the level-set band; defaults to
            ``default_band_tol(sigma)``.

    Returns:
        CommutatorReport.
    """
    mesh = sigma.mesh
    d_theta = recovered_gradient(theta.values, mesh)
    eta = d_theta[:, 0] * sigma.values[:, 1] - d_theta[:, 1] * sigma.values[:, 0]
    tol = default_band_tol(sigma) if band_tol is None else float(band_tol)
    on_band = np.abs(np.linalg.norm(sigma.values, axis=1) - t_hat) <= tol
    return CommutatorReport(
        eta=ScalarField.element(mesh, eta, name="eta"),
        l2=_l2(eta, mesh),
        off_band=_l2(eta, mesh, ~on_band),
        on_band=_l2(eta, mesh, on_band),
        band_tol=tol,
    )


def curl_residual(sigma: VectorField, model: MaterialModel) -> float:
    """Relative curl of |sigma|^(p'-2) sigma.

    The field is the gradient of the state up to the design factor, so its
    curl vanishes wherever the design is locally constant.

    Returns:
        L^2 norm of the discrete curl over the H^1 seminorm, 0 for a
        constant field.
    """
    mesh = sigma.mesh
    jacobians = recovered_gradient(_scaled_flux(sigma, model.p_conj - 2.0), mesh)
    curl = jacobians[:, 1, 0] - jacobians[:, 0, 1]
    seminorm = _h1_seminorm(jacobians, mesh)
    return _l2(curl, mesh) / seminorm if seminorm > 0 else 0.0


def intermediate_measure(theta: ScalarField, band: float) -> float:
    """Area where band < theta < 1 - band.

    Raises:
        ValueError: If band is not in (0, 1/2).
    """
    if not 0 < band < 0.5:
        raise ValueError(f"band must lie in (0, 1/2), got {band}")
    middle = (theta.values > band) & (theta.values < 1.0 - band)
    return float(np.dot(theta.mesh.areas, middle))


def boundary_flux_alignment(sigma: VectorField) -> float:
    """Length-weighted mean of |sigma . t| / |sigma| over boundary edges.

    t is the unit tangent of the edge and sigma is taken on its element.
    Edges whose element carries no flux are skipped; 0 means the flux is
    normal to the boundary.
    """
    mesh = sigma.mesh
    vectors = mesh.nodes[mesh.boundary_edges[:, 1]] - mesh.nodes[mesh.boundary_edges[:, 0]]
    lengths = np.linalg.norm(vectors, axis=1)
    flux = sigma.values[mesh.boundary_edge_elements]
    magnitude = np.linalg.norm(flux, axis=1)
    active = magnitude > 0
    if not np.any(active):
        return 0.0
    tangential = np.abs(np.sum(flux[active] * vectors[active], axis=1)) / lengths[active]
    ratio = tangential / magnitude[active]
    return float(np.dot(lengths[active], ratio) / np.sum(lengths[active]))


def theta_interface_violation(theta: ScalarField, sigma: VectorField, t_hat: float,
                              band: float, tol: float) -> float:
    """Area violating the threshold structure of the design.

    Elements with |sigma| > t_hat (1 + band) must have theta >= 1 - tol and
    elements with |sigma| < t_hat (1 - band) must have theta <= tol.
    """
    magnitude = np.linalg.norm(sigma.values, axis=1)
    high = (magnitude > t_hat * (1.0 + band)) & (theta.values < 1.0 - tol)
    low = (magnitude < t_hat * (1.0 - band)) & (theta.values > tol)
    return float(np.dot(theta.mesh.areas, high | low))


@dataclass
class DiagnosticsReport:
    """Rows of (metric, value, refinement level)."""
    rows: List[Tuple[str, float, int]] = field(default_factory=list)

    def add(self, metric: str, value: float, level: int) -> None:
        self.rows.append((metric, float(value), int(level)))

    def value(self, metric: str, level: Optional[int] = None) -> float:
        """Value of a metric, from the last row at the given level when one is set."""
        for name, value, row_level in reversed(self.rows):
            if name == metric and (level is None or row_level == level):
                return value
        raise KeyError(metric)

    def merge(self, other: "DiagnosticsReport") -> "DiagnosticsReport":
        return DiagnosticsReport(self.rows + other.rows)

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        """Nested mapping level -> metric -> value with string level keys."""
        result: Dict[str, Dict[str, float]] = {}
        for name, value, level in self.rows:
            result.setdefault(str(level), {})[name] = value
        return result

    def to_text(self) -> str:
        return "".join(f"{name} {value:.12g} {level}\n" for name, value, level in self.rows)


def diagnose(solution, level: int = 0, r_exp: float = 0.0, band: float = 0.01,
             interface_tol: float = 1e-6) -> DiagnosticsReport:
    """Run every regularity and structure check on a design solution.

    The flux threshold is mu_hat^(p-1). The flags ``smooth_boundary`` and
    ``load_regularity_known`` record whether the boundary is C^(1,1) (only
    disks) and whether the load is constant, the cases where the regularity
    results are known to apply.

    Args:
        solution: A DesignSolution.
        level: Refinement level recorded with every row.
        r_exp: Exponent of the flux H^1 check.
        band: Band of the intermediate-measure and interface checks.
        interface_tol: Slack on theta in the interface check.

    Returns:
        DiagnosticsReport.
    """
    model = solution.model
    sigma, theta = solution.sigma_hat, solution.theta_hat
    t_hat = solution.mu_hat ** (model.p - 1.0)
    commutator = theta_sigma_commutator(theta, sigma, t_hat)
    domain = solution.mesh.domain
    f = solution.f_tilde.values

    report = DiagnosticsReport()
    report.add("h", solution.mesh.h, level)
    report.add("max_grad_u", float(np.max(np.linalg.norm(gradient(solution.u_hat).values,
                                                         axis=1))), level)
    report.add("flux_h1_seminorm", flux_h1_seminorm(sigma, r_exp), level)
    report.add("commutator_l2", commutator.l2, level)
    report.add("commutator_off_band", commutator.off_band, level)
    report.add("commutator_on_band", commutator.on_band, level)
    report.add("curl_residual", curl_residual(sigma, model), level)
    report.add("intermediate_measure", intermediate_measure(theta, band), level)
    report.add("boundary_flux_alignment", boundary_flux_alignment(sigma), level)
    report.add("theta_interface_violation",
               theta_interface_violation(theta, sigma, t_hat, band, interface_tol), level)
    report.add("smooth_boundary",
               float(domain is not None and domain.shape is ShapeType.DISK), level)
    report.add("load_regularity_known", float(np.all(f == f[0])), level)
    logger.info("Diagnostics at level %d: intermediate measure %.4g, curl residual %.4g",
                level, report.value("intermediate_measure"), report.value("curl_residual"))
    return report
