"""The theta-eliminated energy density F and its smoothed variant F_eps.

For a threshold mu > 0 the slope of F is s^(p-1) below mu, constant
mu^(p-1) on the plateau [mu, (1+c)mu] and s^(p-1)/(1+c)^(p-1) beyond.
The smoothed slope replaces the two kinks by quadratic smooth-min and
smooth-max blends of half-width w = eps * gamma * mu^(p-1) and adds eps*s,
so that F_eps'' >= eps while F_eps' equals F' + eps*s outside the blends.
gamma shrinks the blends for low contrast so the two never overlap.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .base import MaterialModel
from .types import MaterialError

ArrayLike = Union[float, np.ndarray]

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(24)

# Floor applied to s where negative powers appear.
_TINY = 1e-300


@dataclass(frozen=True)
class IntegrandF:
    """Parameters of the convex integrand F.

    Attributes:
        mu: Gradient threshold (Kuhn-Tucker multiplier candidate), >= 0.
        c: Contrast parameter of the material model, > 0.
        p: Exponent, > 1.
        epsilon: Smoothing parameter in [0, 1); 0 gives the exact F.
    """
    mu: float
    c: float
    p: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not self.mu >= 0:
            raise MaterialError(f"mu must be non-negative, got {self.mu}")
        if not self.c > 0:
            raise MaterialError(f"c must be positive, got {self.c}")
        if not self.p > 1:
            raise MaterialError(f"p must be greater than 1, got {self.p}")
        if not 0 <= self.epsilon < 1:
            raise MaterialError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    @classmethod
    def from_model(cls, model: MaterialModel, mu: float, epsilon: float = 0.0) -> "IntegrandF":
        return cls(float(mu), model.c, model.p, float(epsilon))

    def with_epsilon(self, epsilon: float) -> "IntegrandF":
        return IntegrandF(self.mu, self.c, self.p, float(epsilon))

    @property
    def contrast(self) -> float:
        """(1+c)^(p-1), the ratio beta/alpha."""
        return (1.0 + self.c) ** (self.p - 1.0)

    @property
    def blend_width(self) -> float:
        """Half-width of the slope blends around the two kinks."""
        k = self.contrast
        gamma = min(1.0, (k - 1.0) / (2.0 * (k + 1.0)))
        return self.epsilon * gamma * self.mu ** (self.p - 1.0)

    @property
    def kinks(self) -> Tuple[float, float]:
        return self.mu, (1.0 + self.c) * self.mu

    def _bands(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        m = self.mu ** (self.p - 1.0)
        w = self.blend_width
        r = 1.0 / (self.p - 1.0)
        lower = ((m - w) ** r, (m + w) ** r)
        upper = ((1.0 + self.c) * (m - w) ** r, (1.0 + self.c) * (m + w) ** r)
        return lower, upper

    # exact pieces

    def exact_slope(self, s: np.ndarray) -> np.ndarray:
        a = s ** (self.p - 1.0)
        b = a / self.contrast
        if self.mu == 0:
            return b
        return np.minimum(a, np.maximum(self.mu ** (self.p - 1.0), b))

    def exact_value(self, s: np.ndarray) -> np.ndarray:
        p, c, mu = self.p, self.c, self.mu
        tail = s ** p / (p * self.contrast)
        if mu == 0:
            return tail
        low = s ** p / p
        plateau = mu ** p / p + mu ** (p - 1.0) * (s - mu)
        high = mu ** p / p + c * mu ** p + tail - ((1.0 + c) * mu) ** p / (p * self.contrast)
        return np.where(s < mu, low, np.where(s <= (1.0 + c) * mu, plateau, high))

    # smoothed pieces

    def _blended_slope(self, s: np.ndarray) -> np.ndarray:
        a = s ** (self.p - 1.0)
        b = a / self.contrast
        if self.mu == 0 or self.epsilon == 0:
            return self.exact_slope(s)
        m = self.mu ** (self.p - 1.0)
        w = self.blend_width
        split = np.sqrt(1.0 + self.c) * self.mu
        return np.where(s <= split, _smooth_min(a, m, w), _smooth_max(m, b, w))

    def _blended_curvature(self, s: np.ndarray) -> np.ndarray:
        s_safe = np.maximum(s, _TINY)
        da = (self.p - 1.0) * s_safe ** (self.p - 2.0)
        db = da / self.contrast
        if self.mu == 0:
            return db
        a = s ** (self.p - 1.0)
        b = a / self.contrast
        m = self.mu ** (self.p - 1.0)
        split = np.sqrt(1.0 + self.c) * self.mu
        if self.epsilon == 0:
            return np.where(s < self.mu, da, np.where(s <= (1.0 + self.c) * self.mu, 0.0, db))
        w = self.blend_width
        lower = np.where(a <= m - w, da,
                         np.where(a >= m + w, 0.0, (0.5 - (a - m) / (2.0 * w)) * da))
        upper = np.where(b >= m + w, db,
                         np.where(b <= m - w, 0.0, (0.5 + (b - m) / (2.0 * w)) * db))
        return np.where(s <= split, lower, upper)

    def _band_correction(self, s: np.ndarray) -> np.ndarray:
        """Integral from 0 to s of the blended slope minus the exact slope."""
        total = np.zeros_like(s)
        if self.mu == 0 or self.epsilon == 0:
            return total
        for (lo, hi), kink in zip(self._bands(), self.kinks):
            for start, stop in ((lo, kink), (kink, hi)):
                upper = np.clip(s, start, stop)
                half = 0.5 * (upper - start)
                nodes = start + half[..., None] * (_GAUSS_NODES + 1.0)
                gap = self._blended_slope(nodes) - self.exact_slope(nodes)
                total = total + half * (gap @ _GAUSS_WEIGHTS)
        return total

    def slope(self, s: ArrayLike) -> np.ndarray:
        s = _check_s(s)
        return self._blended_slope(s) + self.epsilon * s

    def value(self, s: ArrayLike) -> np.ndarray:
        s = _check_s(s)
        return self.exact_value(s) + self._band_correction(s) + 0.5 * self.epsilon * s ** 2

    def curvature(self, s: ArrayLike) -> np.ndarray:
        s = _check_s(s)
        return self._blended_curvature(s) + self.epsilon


def _smooth_min(a: np.ndarray, b: ArrayLike, w: float) -> np.ndarray:
    h = a - b
    blend = 0.5 * (a + b) - h ** 2 / (4.0 * w) - 0.25 * w
    return np.where(np.abs(h) >= w, np.minimum(a, b), blend)


def _smooth_max(a: ArrayLike, b: np.ndarray, w: float) -> np.ndarray:
    h = a - b
    blend = 0.5 * (a + b) + h ** 2 / (4.0 * w) + 0.25 * w
    return np.where(np.abs(h) >= w, np.maximum(a, b), blend)


def _check_s(s: ArrayLike) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise MaterialError("F is only defined for finite s >= 0")
    return s


def F_value_and_slope(s: ArrayLike, F: IntegrandF) -> Tuple[ArrayLike, ArrayLike]:
    """Evaluate F (or F_eps) and its slope.

    Args:
        s: Gradient magnitude(s), >= 0.
        F: Integrand parameters.

    Returns:
        Tuple (value, slope), scalars for scalar input.

    Raises:
        MaterialError: If any s is negative.
    """
    value, slope = F.value(s), F.slope(s)
    if np.ndim(s) == 0:
        return float(value), float(slope)
    return value, slope
