"""Bump-field instances whose normalizing constant is known in closed form
up to one cheap radial integral.

The unit cube is tiled with floor(1/w)^d cells of side w. An active cell
carries a smooth compactly-supported dip

    g(x) = -(eta / h(0)) * h(2 (x - center) / w),
    h(u) = exp(-1 / (1 - ||u||^2))  for ||u|| < 1, else 0,

so f is zero outside the active bump balls and has depth exactly -eta at
each active center. The constant then decomposes as

    Z = 1 + n_active * dz,   dz = integral over one ball of (exp(-lambda g) - 1),

and dz is sandwiched between closed-form envelopes. Depth eta follows the
cell count as eta = norm_budget * c_eta * M^{-(nu/d + 1/2)} unless given
explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundInapplicableError, ParameterError
from .objectives import Objective

__all__ = [
    "BumpClassSpec",
    "make_instance",
    "random_signs",
    "delta_z",
    "delta_z_bounds",
    "analytic_nc",
]

_RADIAL_NODES = 10_001


@dataclass(frozen=True)
class BumpClassSpec:
    """Geometry of a bump field: dimension (1 to 3), cell width, smoothness.

    eta is the bump depth; when None it is derived from norm_budget (the
    function-class size proxy) and c_eta via the cell count.
    """

    dim: int
    width: float
    nu: float
    eta: float | None = None
    norm_budget: float = 1.0
    c_eta: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not 0 < self.width <= 1:
            raise ParameterError(f"width must lie in (0, 1], got {self.width}")
        if self.nu <= 0:
            raise ParameterError(f"nu must be positive, got {self.nu}")
        if self.norm_budget <= 0 or self.c_eta <= 0:
            raise ParameterError("norm_budget and c_eta must be positive")
        if self.eta is None:
            depth = self.norm_budget * self.c_eta * self.n_cells ** -(self.nu / self.dim + 0.5)
            object.__setattr__(self, "eta", float(depth))
        if not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")

    @property
    def cells_per_side(self) -> int:
        return int(np.floor(1.0 / self.width))

    @property
    def n_cells(self) -> int:
        return self.cells_per_side**self.dim


def random_signs(spec: BumpClassSpec, seed: int, density: float = 0.5) -> np.ndarray:
    """0/1 activity flags for each cell, Bernoulli(density) under `seed`."""
    if not 0 <= density <= 1:
        raise ParameterError(f"density must lie in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    return (rng.random(spec.n_cells) < density).astype(np.int8)


def _check_signs(spec: BumpClassSpec, signs) -> np.ndarray:
    signs = np.asarray(signs)
    if signs.shape != (spec.n_cells,):
        raise ParameterError(f"signs must have shape ({spec.n_cells},), got {signs.shape}")
    if not np.isin(signs, (0, 1)).all():
        raise ParameterError("signs entries must be 0 or 1")
    return signs.astype(np.int8)


class _BumpField:
    def __init__(self, dim: int, width: float, eta: float, cells_per_side: int, signs: np.ndarray):
        self.dim = dim
        self.width = width
        self.eta = eta
        self.cells_per_side = cells_per_side
        self.signs = signs

    def __call__(self, X: np.ndarray) -> np.ndarray:
        m1, w = self.cells_per_side, self.width
        idx = np.floor(X / w).astype(int)
        inside = np.all((idx >= 0) & (idx < m1), axis=1)
        idx = np.clip(idx, 0, m1 - 1)
        flat = np.zeros(X.shape[0], dtype=int)
        for c in range(self.dim):  # row-major cell index
            flat = flat * m1 + idx[:, c]
        active = inside & (self.signs[flat] == 1)
        out = np.zeros(X.shape[0])
        if active.any():
            centers = (idx[active] + 0.5) * w
            u2 = np.sum((2.0 * (X[active] - centers) / w) ** 2, axis=1)
            vals = np.zeros(u2.shape)
            supp = u2 < 1.0
            # -(eta / h(0)) h(u) with h(0) = e^{-1}
            vals[supp] = -self.eta * np.exp(1.0 - 1.0 / (1.0 - u2[supp]))
            out[active] = vals
        return out


def make_instance(spec: BumpClassSpec, signs) -> Objective:
    """Objective for one activity pattern; name encodes geometry and count."""
    signs = _check_signs(spec, signs)
    field = _BumpField(spec.dim, spec.width, spec.eta, spec.cells_per_side, signs)
    return Objective(
        name=f"hardclass-d{spec.dim}-w{spec.width:g}-n{int(signs.sum())}",
        dim=spec.dim,
        fn=field,
        nu_default=spec.nu if spec.nu in (0.5, 1.5, 2.5) else 1.5,
        fixed_hyperparams=None,
        note=f"{int(signs.sum())} of {spec.n_cells} cells active, depth {spec.eta:g}",
    )


def delta_z(spec: BumpClassSpec, lam: float) -> float:
    """Per-bump excess mass: integral over one ball of exp(-lambda g) - 1,
    reduced to a radial trapezoid with 10^4 panels."""
    if lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    d, w, eta = spec.dim, spec.width, spec.eta
    surface = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    r = np.linspace(0.0, w / 2.0, _RADIAL_NODES)
    u2 = (2.0 * r / w) ** 2
    depth = np.zeros_like(r)
    supp = u2 < 1.0
    depth[supp] = eta * np.exp(1.0 - 1.0 / (1.0 - u2[supp]))
    integrand = np.expm1(lam * depth) * r ** (d - 1)
    return float(surface * np.trapezoid(integrand, r))


def delta_z_bounds(spec: BumpClassSpec, lam: float) -> tuple[float, float]:
    """Closed-form sandwich for delta_z:

        2^-d w^d (e^{c2 lambda eta} - 1)  <=  dz  <=  w^d (e^{lambda eta} - 1),

    c2 = h(half-diagonal) / h(0) = exp(1 - 4 / (4 - d)), which requires the
    half-diagonal of the scaled cell inside the bump support, i.e. d <= 3.
    """
    if lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if spec.dim > 3:
        raise BoundInapplicableError("sandwich bounds require dim <= 3")
    c1 = 2.0**-spec.dim
    c2 = math.exp(1.0 - 4.0 / (4.0 - spec.dim))
    lo = c1 * spec.width**spec.dim * math.expm1(c2 * lam * spec.eta)
    hi = spec.width**spec.dim * math.expm1(lam * spec.eta)
    return lo, hi


def analytic_nc(spec: BumpClassSpec, signs, lam: float) -> float:
    """Normalizing constant of the instance: 1 + n_active * delta_z."""
    signs = _check_signs(spec, signs)
    return 1.0 + int(signs.sum()) * delta_z(spec, lam)
