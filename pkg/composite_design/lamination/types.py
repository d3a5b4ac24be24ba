"""Lamination exceptions."""

from typing import Optional


class LaminationError(Exception):
    """Error raised when a laminate cannot be realized on the given mesh.

    Attributes:
        required_h: Largest admissible mesh size, when the mesh is too coarse.
    """

    def __init__(self, message: str, required_h: Optional[float] = None) -> None:
        super().__init__(message)
        self.required_h = required_h
