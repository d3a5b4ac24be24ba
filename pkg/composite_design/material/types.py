"""Material model exceptions."""


class MaterialError(Exception):
    """Error raised when material parameters or material inputs are invalid."""
    pass
