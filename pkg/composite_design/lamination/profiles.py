"""Periodic layer profile H and its corrector integral G."""

from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


def _check_q(q: ArrayLike) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if np.any(q < 0.0) or np.any(q > 1.0):
        raise ValueError("layer proportion q must lie in [0, 1]")
    return q


def H_eval(q: ArrayLike, r: ArrayLike) -> ArrayLike:
    """1-periodic layer indicator: 1 when frac(r) lies in [0, q), else 0."""
    q = _check_q(q)
    r = np.asarray(r, dtype=float)
    result = (r - np.floor(r) < q).astype(float)
    return float(result) if result.ndim == 0 else result


def G_eval(q: ArrayLike, r: ArrayLike) -> ArrayLike:
    """Corrector profile G(q, r) = q r - integral_0^r H(q, s) ds.

    G is 1-periodic, piecewise linear, vanishes at integers and satisfies
    q(q-1) <= G <= 0.
    """
    q = _check_q(q)
    r = np.asarray(r, dtype=float)
    frac = r - np.floor(r)
    result = q * frac - np.minimum(frac, q)
    return float(result) if result.ndim == 0 else result
