"""Artifact writers: field and table CSVs, the run summary and VTK export."""

from typing import Any, Dict, Iterable, List, Optional, Sequence, Union
import csv
import json
import logging
import os

import numpy as np
import pyvista as pv

from ..core.fields.base import ScalarField, VectorField
from ..core.fields.types import StorageKind
from ..core.geometry.base import Mesh
from ..solver.types import ConvergenceError, IterationRecord
from ..design.types import BracketError
from ..lamination.types import LaminationError
from .config import ConfigError

logger = logging.getLogger(__name__)

AnyField = Union[ScalarField, VectorField]


def _number(value: float) -> str:
    return repr(float(value))


def _writer(handle):
    return csv.writer(handle, lineterminator="\n")


def write_mesh_csv(mesh: Mesh, directory: str) -> List[str]:
    """Write nodes.csv and elements.csv.

    Returns:
        The written paths.
    """
    nodes_path = os.path.join(directory, "nodes.csv")
    with open(nodes_path, "w", newline="") as handle:
        writer = _writer(handle)
        writer.writerow(["index", "x", "y", "boundary"])
        for i, (x, y) in enumerate(mesh.nodes):
            writer.writerow([i, _number(x), _number(y), int(mesh.boundary_nodes[i])])
    elements_path = os.path.join(directory, "elements.csv")
    with open(elements_path, "w", newline="") as handle:
        writer = _writer(handle)
        writer.writerow(["index", "n0", "n1", "n2", "area"])
        for i, (a, b, c) in enumerate(mesh.elements):
            writer.writerow([i, a, b, c, _number(mesh.areas[i])])
    return [nodes_path, elements_path]


def write_field_csv(field: AnyField, path: str, name: Optional[str] = None) -> str:
    """Write one field with a ``# field=... unit=... storage=...`` header line."""
    label = name or field.name or "field"
    storage = field.storage.name.lower() if isinstance(field, ScalarField) else "element"
    with open(path, "w", newline="") as handle:
        handle.write(f"# field={label} unit={field.unit or '-'} storage={storage}\n")
        writer = _writer(handle)
        if isinstance(field, ScalarField):
            writer.writerow(["index", "value"])
            for i, value in enumerate(field.values):
                writer.writerow([i, _number(value)])
        else:
            writer.writerow(["index", "x", "y"])
            for i, (vx, vy) in enumerate(field.values):
                writer.writerow([i, _number(vx), _number(vy)])
    return path


def write_table_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Write a plain table; floats are written with full precision."""
    with open(path, "w", newline="") as handle:
        writer = _writer(handle)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_number(v) if isinstance(v, (float, np.floating)) else v
                             for v in row])
    return path


def write_iteration_log(history: Sequence[IterationRecord], path: str) -> str:
    return write_table_csv(path, ["iter", "energy", "residual", "step_length"],
                           ([r.iteration, r.energy, r.residual, r.step_length]
                            for r in history))


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def write_summary(path: str, payload: Dict[str, Any]) -> str:
    """Write the run summary as JSON with sorted keys."""
    with open(path, "w") as handle:
        json.dump(_plain(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def error_block(error: Exception) -> Dict[str, Any]:
    """Machine-readable description of a failure."""
    block: Dict[str, Any] = {"type": type(error).__name__, "message": str(error)}
    if isinstance(error, ConfigError) and error.key:
        block["key"] = error.key
    if isinstance(error, LaminationError) and error.required_h is not None:
        block["required_h"] = error.required_h
    if isinstance(error, ConvergenceError):
        block["residual"] = error.residual
        block["iterations"] = len(error.history)
    if isinstance(error, BracketError):
        block["sweep"] = [list(pair) for pair in error.sweep]
    return block


def mesh_to_pyvista(mesh: Mesh, fields: Sequence[AnyField] = ()) -> pv.PolyData:
    """Convert a mesh and its fields to a PyVista surface in the z = 0 plane.

    Nodal fields become point data; per-element fields become cell data.
    """
    points = np.column_stack([mesh.nodes, np.zeros(mesh.n_nodes)])
    faces = np.hstack([np.full((mesh.n_elements, 1), 3, dtype=np.int64), mesh.elements])
    surface = pv.PolyData(points, faces.ravel())
    for index, field in enumerate(fields):
        label = field.name or f"field_{index}"
        if isinstance(field, VectorField):
            surface.cell_data[label] = np.column_stack([field.values,
                                                        np.zeros(mesh.n_elements)])
        elif field.storage is StorageKind.NODAL:
            surface.point_data[label] = np.asarray(field.values)
        else:
            surface.cell_data[label] = np.asarray(field.values)
    return surface


def export_vtk(mesh: Mesh, fields: Sequence[AnyField], path: str) -> str:
    """Save a mesh and its fields as a VTK file."""
    mesh_to_pyvista(mesh, fields).save(path)
    logger.info("Wrote %s", path)
    return path
