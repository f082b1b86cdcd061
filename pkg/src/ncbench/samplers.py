"""Samplers targeting exp(-lambda * energy) on the unit cube.

Two routes: an unadjusted Langevin chain driven by the surrogate's mean
gradient (approximate, used by the two-batch estimator), and exact inverse-CDF
sampling from tabulated piecewise-constant densities (used by the
piecewise-constant baseline and by calibration tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensityError, ParameterError
from .streams import RngStream

__all__ = [
    "LmcConfig",
    "reflect_unit",
    "lmc_sample",
    "lmc_sample_batch",
    "grid_inverse_cdf_sample_1d",
    "cell_inverse_cdf_sample",
]


@dataclass(frozen=True)
class LmcConfig:
    """Unadjusted Langevin settings.

    The default update is x <- reflect(x - beta * grad + sqrt(2 beta / lambda) * eps).
    With scale_drift_by_lambda the drift becomes -beta * lambda * grad and the
    noise sqrt(2 beta) * eps; both target the same density, differing only in
    the effective step size at finite length.
    """

    steps: int = 20
    beta: float = 1e-3
    scale_drift_by_lambda: bool = False

    def __post_init__(self):
        if self.steps < 0:
            raise ParameterError(f"steps must be >= 0, got {self.steps}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")


def reflect_unit(x: np.ndarray) -> np.ndarray:
    """Fold arbitrary reals into [0, 1] by repeated boundary reflection."""
    t = np.mod(np.abs(x), 2.0)
    return 1.0 - np.abs(t - 1.0)


def lmc_sample_batch(state, lam: float, cfg: LmcConfig, rng: RngStream, n_samples: int) -> np.ndarray:
    """n_samples approximate draws from the density proportional to
    exp(-lambda * posterior_mean), each from its own uniformly-initialized
    chain; all chains advance in lockstep.

    Stream layout: n_samples * dim uniforms for the initial positions, then
    n_samples * dim normals per step, in step order.
    """
    if lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if n_samples < 1:
        raise ParameterError(f"n_samples must be >= 1, got {n_samples}")
    d = state.dim
    x = rng.uniform((n_samples, d))
    if cfg.scale_drift_by_lambda:
        drift_scale = cfg.beta * lam
        noise_scale = np.sqrt(2.0 * cfg.beta)
    else:
        drift_scale = cfg.beta
        noise_scale = np.sqrt(2.0 * cfg.beta / lam)
    for _ in range(cfg.steps):
        grad = state.mean_grad_many(x)
        eps = rng.normal((n_samples, d))
        x = reflect_unit(x - drift_scale * grad + noise_scale * eps)
    return x


def lmc_sample(state, lam: float, cfg: LmcConfig, rng: RngStream) -> np.ndarray:
    """Single Langevin draw; equivalent to lmc_sample_batch with one chain."""
    return lmc_sample_batch(state, lam, cfg, rng, 1)[0]


def _normalized_masses(masses: np.ndarray) -> np.ndarray:
    if masses.ndim != 1 or masses.size < 1:
        raise ParameterError(f"expected a 1-D mass table, got shape {masses.shape}")
    if not np.all(np.isfinite(masses)) or masses.min() < 0:
        raise DegenerateDensityError("density table must be finite and non-negative")
    total = masses.sum()
    if not total > 0:
        raise DegenerateDensityError("density table has zero total mass")
    return masses / total


def grid_inverse_cdf_sample_1d(node_values: np.ndarray, rng: RngStream, n_samples: int) -> np.ndarray:
    """Exact draws from the piecewise-constant density on [0, 1] induced by a
    closed-grid table: cell i on [i/m, (i+1)/m) has mass (v[i] + v[i+1]) / 2.

    One uniform per sample selects both the cell and the position inside it
    (the within-cell law is uniform), so the mapping is a true inverse CDF.
    Returns (n_samples, 1) points.
    """
    v = np.asarray(node_values, dtype=float).ravel()
    if v.size < 2:
        raise ParameterError("need at least 2 node values")
    masses = _normalized_masses(0.5 * (v[:-1] + v[1:]))
    cum = np.cumsum(masses)
    cum[-1] = 1.0
    m = masses.size
    u = np.atleast_1d(rng.uniform(n_samples))
    cells = np.searchsorted(cum, u, side="right")
    cells = np.minimum(cells, m - 1)
    left_mass = cum[cells] - masses[cells]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = (u - left_mass) / masses[cells]
    frac = np.clip(np.nan_to_num(frac), 0.0, 1.0)
    return ((cells + frac) / m)[:, None]


def cell_inverse_cdf_sample(
    cell_masses: np.ndarray, cells_per_side: int, dim: int, rng: RngStream, n_samples: int
) -> np.ndarray:
    """Exact draws from a piecewise-constant density over a cubic cell tiling.

    cell_masses is row-major over the tiling (last axis fastest). One uniform
    per sample picks the cell by inverse CDF, then dim uniforms per sample
    place it inside; draw order is all cell picks, then all positions.
    """
    masses = _normalized_masses(np.asarray(cell_masses, dtype=float).ravel())
    if masses.size != cells_per_side**dim:
        raise ParameterError(f"expected {cells_per_side**dim} cells, got {masses.size}")
    cum = np.cumsum(masses)
    cum[-1] = 1.0
    u = np.atleast_1d(rng.uniform(n_samples))
    flat = np.minimum(np.searchsorted(cum, u, side="right"), masses.size - 1)
    pos = rng.uniform((n_samples, dim))
    idx = np.empty((n_samples, dim), dtype=int)
    rem = flat
    for c in range(dim - 1, -1, -1):
        idx[:, c] = rem % cells_per_side
        rem = rem // cells_per_side
    return (idx + pos) / cells_per_side
