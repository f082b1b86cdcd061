"""Matern covariance kernels with half-integer smoothness.

Closed forms, with u = ||x - x'|| / lengthscale:

    nu = 1/2 : k = s * exp(-u)
    nu = 3/2 : k = s * (1 + sqrt(3) u) * exp(-sqrt(3) u)
    nu = 5/2 : k = s * (1 + sqrt(5) u + 5 u^2 / 3) * exp(-sqrt(5) u)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionError, ParameterError

__all__ = ["NU_VALUES", "KernelSpec", "value", "gram", "cross", "grad_x"]

NU_VALUES = (0.5, 1.5, 2.5)

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class KernelSpec:
    """Smoothness nu in {0.5, 1.5, 2.5}, lengthscale > 0, scale > 0."""

    nu: float
    lengthscale: float
    scale: float

    def __post_init__(self):
        if self.nu not in NU_VALUES:
            raise ParameterError(f"nu must be one of {NU_VALUES}, got {self.nu}")
        if not (self.lengthscale > 0 and np.isfinite(self.lengthscale)):
            raise ParameterError(f"lengthscale must be positive, got {self.lengthscale}")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ParameterError(f"scale must be positive, got {self.scale}")


def profile(nu: float, u: np.ndarray) -> np.ndarray:
    """Unit-scale correlation as a function of scaled distance u >= 0."""
    u = np.asarray(u, dtype=float)
    if nu == 0.5:
        return np.exp(-u)
    if nu == 1.5:
        t = _SQRT3 * u
        return (1.0 + t) * np.exp(-t)
    if nu == 2.5:
        t = _SQRT5 * u
        return (1.0 + t + t * t / 3.0) * np.exp(-t)
    raise ParameterError(f"nu must be one of {NU_VALUES}, got {nu}")


def _deriv_over_u(nu: float, u: np.ndarray) -> np.ndarray:
    """profile'(u) / u, finite for nu >= 3/2; the nu = 1/2 case is singular
    at u = 0 and callers must mask coincident points themselves."""
    if nu == 0.5:
        with np.errstate(divide="ignore", over="ignore"):
            return -np.exp(-u) / u
    if nu == 1.5:
        return -3.0 * np.exp(-_SQRT3 * u)
    if nu == 2.5:
        return -(5.0 / 3.0) * (1.0 + _SQRT5 * u) * np.exp(-_SQRT5 * u)
    raise ParameterError(f"nu must be one of {NU_VALUES}, got {nu}")


def _as_points(X, dim_hint=None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2:
        raise DimensionError(f"expected (n, d) points, got shape {X.shape}")
    if dim_hint is not None and X.shape[1] != dim_hint:
        raise DimensionError(f"point dimension {X.shape[1]} != {dim_hint}")
    return X


def value(spec: KernelSpec, x, y) -> float:
    """Covariance between two single points."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    r = float(np.linalg.norm(x - y))
    return float(spec.scale * profile(spec.nu, np.asarray(r / spec.lengthscale)))


def cross(spec: KernelSpec, X, Y) -> np.ndarray:
    """Covariance matrix between row sets: (n, m) for X (n,d), Y (m,d)."""
    X = _as_points(X)
    Y = _as_points(Y, dim_hint=X.shape[1])
    r = cdist(X, Y)
    return spec.scale * profile(spec.nu, r / spec.lengthscale)


def gram(spec: KernelSpec, X) -> np.ndarray:
    """Symmetric covariance matrix of one point set; PSD up to roundoff."""
    X = _as_points(X)
    K = cross(spec, X, X)
    return 0.5 * (K + K.T)


def grad_x(spec: KernelSpec, x, centers) -> np.ndarray:
    """Gradient of k(x, c) in x, one row per center c; (n, d).

    At r = 0 the gradient is zero for nu >= 3/2 and is defined as zero for
    nu = 1/2 (the kernel has a kink there).
    """
    x = np.asarray(x, dtype=float).ravel()
    C = _as_points(centers, dim_hint=x.size)
    diff = x[None, :] - C
    r = np.linalg.norm(diff, axis=1)
    u = r / spec.lengthscale
    fac = _deriv_over_u(spec.nu, u) * (spec.scale / spec.lengthscale**2)
    fac = np.where(r > 0, fac, 0.0)
    return fac[:, None] * diff
