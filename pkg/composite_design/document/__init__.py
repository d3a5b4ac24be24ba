"""
Run configuration and artifact output.
"""

from .config import *
from .io import *

__all__ = [
    # From config.py
    'ConfigError', 'LoadSpec', 'RunConfig', 'parse_config', 'REQUIRED_KEYS', 'OPTIONAL_KEYS',
    # From io.py
    'write_mesh_csv', 'write_field_csv', 'write_table_csv', 'write_iteration_log',
    'write_summary', 'error_block', 'mesh_to_pyvista', 'export_vtk'
]
