"""Discrete scalar and vector fields on a mesh."""

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from ..geometry.base import Mesh
from .types import StorageKind, FieldError


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values per node or per element of a mesh.

    Fields are value snapshots: the values array is copied on construction
    and made read-only, and every operation returns a new field.

    Attributes:
        mesh: The mesh the field lives on.
        storage: Nodal or per-element storage.
        values: One value per node or per element.
        unit: Free-form unit tag written into exports.
        dirichlet: Whether a nodal field carries the homogeneous Dirichlet
            condition, i.e. must vanish on boundary nodes.
    """
    mesh: Mesh
    storage: StorageKind
    values: np.ndarray
    unit: str = ""
    dirichlet: bool = False
    name: str = field(default="")

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))
        expected = self.mesh.n_nodes if self.storage is StorageKind.NODAL else self.mesh.n_elements
        if self.values.shape != (expected,):
            raise FieldError(
                f"{self.storage.name.lower()} field on {self.mesh!r} needs {expected} values, "
                f"got shape {self.values.shape}")
        if self.dirichlet:
            if self.storage is not StorageKind.NODAL:
                raise FieldError("only nodal fields can carry a Dirichlet condition")
            if np.any(self.values[self.mesh.boundary_nodes] != 0.0):
                raise FieldError("Dirichlet field must vanish on boundary nodes")

    @classmethod
    def nodal(cls, mesh: Mesh, values: np.ndarray, unit: str = "", dirichlet: bool = False,
              name: str = "") -> "ScalarField":
        return cls(mesh, StorageKind.NODAL, values, unit, dirichlet, name)

    @classmethod
    def element(cls, mesh: Mesh, values: np.ndarray, unit: str = "",
                name: str = "") -> "ScalarField":
        return cls(mesh, StorageKind.ELEMENT, values, unit, False, name)

    @classmethod
    def constant(cls, mesh: Mesh, value: float, storage: StorageKind = StorageKind.ELEMENT,
                 unit: str = "", name: str = "") -> "ScalarField":
        count = mesh.n_nodes if storage is StorageKind.NODAL else mesh.n_elements
        return cls(mesh, storage, np.full(count, float(value)), unit, False, name)

    @classmethod
    def from_function(cls, mesh: Mesh, function: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      storage: StorageKind = StorageKind.NODAL, unit: str = "",
                      name: str = "") -> "ScalarField":
        """Sample a function of (x, y) at nodes or at element centroids."""
        points = mesh.nodes if storage is StorageKind.NODAL else mesh.centroids
        values = np.broadcast_to(np.asarray(function(points[:, 0], points[:, 1]), dtype=float),
                                 (len(points),))
        return cls(mesh, storage, values, unit, False, name)

    @property
    def is_nodal(self) -> bool:
        return self.storage is StorageKind.NODAL

    def with_values(self, values: np.ndarray, unit: str = None, name: str = None) -> "ScalarField":
        """Return a field on the same mesh and storage with new values."""
        return ScalarField(self.mesh, self.storage, values,
                           self.unit if unit is None else unit, False,
                           self.name if name is None else name)

    def with_dirichlet(self) -> "ScalarField":
        """Return a nodal copy tagged with the homogeneous Dirichlet condition."""
        return ScalarField(self.mesh, self.storage, self.values, self.unit, True, self.name)

    def _check_compatible(self, other: "ScalarField") -> None:
        if other.mesh is not self.mesh or other.storage is not self.storage:
            raise FieldError("fields live on different meshes or storages")

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: Union[int, float]) -> "ScalarField":
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """One constant 2D vector per element of a mesh."""
    mesh: Mesh
    values: np.ndarray
    unit: str = ""
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.mesh.n_elements, 2):
            raise FieldError(
                f"vector field needs shape ({self.mesh.n_elements}, 2), got {self.values.shape}")

    @classmethod
    def from_function(cls, mesh: Mesh,
                      function: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      unit: str = "", name: str = "") -> "VectorField":
        """Sample a vector function of (x, y) at element centroids.

        The function returns a pair of arrays (vx, vy).
        """
        vx, vy = function(mesh.centroids[:, 0], mesh.centroids[:, 1])
        shape = (mesh.n_elements,)
        values = np.column_stack([np.broadcast_to(vx, shape), np.broadcast_to(vy, shape)])
        return cls(mesh, values, unit, name)

    def magnitude(self) -> ScalarField:
        """Per-element Euclidean norm."""
        return ScalarField.element(self.mesh, np.linalg.norm(self.values, axis=1), self.unit,
                                   f"|{self.name}|" if self.name else "")

    def __add__(self, other: "VectorField") -> "VectorField":
        if other.mesh is not self.mesh:
            raise FieldError("fields live on different meshes")
        return VectorField(self.mesh, self.values + other.values, self.unit, self.name)

    def __sub__(self, other: "VectorField") -> "VectorField":
        if other.mesh is not self.mesh:
            raise FieldError("fields live on different meshes")
        return VectorField(self.mesh, self.values - other.values, self.unit, self.name)

    def __mul__(self, scalar: Union[int, float]) -> "VectorField":
        return VectorField(self.mesh, self.values * float(scalar), self.unit, self.name)

    __rmul__ = __mul__
