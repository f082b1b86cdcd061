"""Gaussian-process posterior over unit-cube inputs.

GpState is immutable: fitting or extending returns a new state. The Cholesky
factor of (gram + xi I) is carried along and grown one row per added point,
so a sequential design loop costs O(n^2) per step instead of O(n^3).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, eigh, solve_triangular

from . import kernels
from .errors import (
    DimensionError,
    FitError,
    NumericalBreakdownError,
    ParameterError,
)
from .kernels import KernelSpec
from .streams import RngStream

__all__ = ["GpState", "SearchBudget", "max_variance_point", "fit_hyperparams", "HyperFit"]

_PIVOT_FLOOR = 1e-12
_CHUNK = 16384


@dataclass(frozen=True)
class GpState:
    """Posterior after observing y = f(X) + noise, with jitter xi on the diagonal."""

    kernel: KernelSpec
    X: np.ndarray
    y: np.ndarray
    xi: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)

    @classmethod
    def empty(cls, kernel: KernelSpec, dim: int, xi: float) -> "GpState":
        if dim < 1:
            raise ParameterError(f"dim must be >= 1, got {dim}")
        if not xi > 0:
            raise ParameterError(f"xi must be positive, got {xi}")
        z = np.zeros((0, dim))
        return cls(kernel, z, np.zeros(0), float(xi), np.zeros((0, 0)), np.zeros(0))

    @classmethod
    def fit(cls, kernel: KernelSpec, X, y, xi: float) -> "GpState":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise DimensionError(f"{X.shape[0]} points but {y.size} observations")
        if not xi > 0:
            raise ParameterError(f"xi must be positive, got {xi}")
        K = kernels.gram(kernel, X) + xi * np.eye(X.shape[0])
        try:
            L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdownError(f"covariance not positive definite: {exc}") from exc
        alpha = cho_solve((L, True), y)
        return cls(kernel, X, y, float(xi), L, alpha)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def extend(self, x, y_new: float) -> "GpState":
        """Add one observation by bordering the Cholesky factor."""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise DimensionError(f"point dimension {x.size} != {self.dim}")
        k_xx = self.kernel.scale + self.xi
        if self.n == 0:
            L = np.array([[np.sqrt(k_xx)]])
            X = x[None, :]
            y = np.array([float(y_new)])
        else:
            k_vec = kernels.cross(self.kernel, self.X, x[None, :]).ravel()
            w = solve_triangular(self.chol, k_vec, lower=True)
            piv2 = k_xx - w @ w
            if piv2 < _PIVOT_FLOOR:
                raise NumericalBreakdownError(
                    f"bordering pivot {piv2:.3e} below floor; point too close to the design"
                )
            L = np.zeros((self.n + 1, self.n + 1))
            L[: self.n, : self.n] = self.chol
            L[self.n, : self.n] = w
            L[self.n, self.n] = np.sqrt(piv2)
            X = np.vstack([self.X, x[None, :]])
            y = np.append(self.y, float(y_new))
        alpha = cho_solve((L, True), y)
        return replace(self, X=X, y=y, chol=L, alpha=alpha)

    def _cross_chunks(self, P: np.ndarray):
        for start in range(0, P.shape[0], _CHUNK):
            yield start, kernels.cross(self.kernel, self.X, P[start : start + _CHUNK])

    def mean(self, points) -> np.ndarray | float:
        """Posterior mean; scalar for a single point, (m,) for a batch."""
        P = np.asarray(points, dtype=float)
        single = P.ndim == 1
        P = np.atleast_2d(P)
        if P.shape[1] != self.dim:
            raise DimensionError(f"point dimension {P.shape[1]} != {self.dim}")
        out = np.zeros(P.shape[0])
        if self.n:
            for start, Ks in self._cross_chunks(P):
                out[start : start + Ks.shape[1]] = Ks.T @ self.alpha
        return float(out[0]) if single else out

    def var(self, points) -> np.ndarray | float:
        """Posterior variance; clamps roundoff negatives, errors on real ones."""
        P = np.asarray(points, dtype=float)
        single = P.ndim == 1
        P = np.atleast_2d(P)
        if P.shape[1] != self.dim:
            raise DimensionError(f"point dimension {P.shape[1]} != {self.dim}")
        s = self.kernel.scale
        out = np.full(P.shape[0], s)
        if self.n:
            for start, Ks in self._cross_chunks(P):
                W = solve_triangular(self.chol, Ks, lower=True)
                out[start : start + Ks.shape[1]] = s - np.einsum("ij,ij->j", W, W)
        floor = -1e-8 * s
        if out.min() < floor:
            raise NumericalBreakdownError(f"posterior variance {out.min():.3e} below roundoff floor")
        out = np.maximum(out, 0.0)
        return float(out[0]) if single else out

    def mean_grad(self, x) -> np.ndarray:
        """Gradient of the posterior mean at one point; zeros for an empty state."""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise DimensionError(f"point dimension {x.size} != {self.dim}")
        if self.n == 0:
            return np.zeros_like(x)
        G = kernels.grad_x(self.kernel, x, self.X)
        return G.T @ self.alpha

    def mean_grad_many(self, points) -> np.ndarray:
        """Posterior-mean gradients for a batch: (m, dim)."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.shape[1] != self.dim:
            raise DimensionError(f"point dimension {P.shape[1]} != {self.dim}")
        if self.n == 0:
            return np.zeros_like(P)
        k = self.kernel
        diff = P[:, None, :] - self.X[None, :, :]
        r = np.linalg.norm(diff, axis=2)
        u = r / k.lengthscale
        with np.errstate(divide="ignore", over="ignore"):
            fac = kernels._deriv_over_u(k.nu, u) * (k.scale / k.lengthscale**2)
        fac = np.where(r > 0, fac, 0.0)
        return np.einsum("mn,mnd,n->md", fac, diff, self.alpha)

    def loglik(self) -> float:
        """Marginal log-likelihood of the held observations."""
        if self.n == 0:
            return 0.0
        return float(
            -0.5 * self.y @ self.alpha
            - np.sum(np.log(np.diag(self.chol)))
            - 0.5 * self.n * np.log(2 * np.pi)
        )


@dataclass(frozen=True)
class SearchBudget:
    """Seed counts and refinement schedule for the variance-maximization search.

    Coarse seeds are ceil(10/d) inward-pulled corner layers of the cube
    (2^d points each); random seeds are 10 d uniform draws from `rng`.
    """

    rng: RngStream
    refine_top: int = 16
    step_init: float = 0.25
    step_tol: float = 1e-3
    max_sweeps: int = 16

    def seeds(self, dim: int) -> np.ndarray:
        layers = int(np.ceil(10 / dim))
        corners = np.array(np.meshgrid(*[[0.0, 1.0]] * dim)).reshape(dim, -1).T
        coarse = []
        for j in range(layers):
            a = (j + 1) / (2 * layers + 2)
            coarse.append(corners * (1 - 2 * a) + a)
        rand = self.rng.uniform((10 * dim, dim))
        return np.vstack(coarse + [rand])


def max_variance_point(state: GpState, search: SearchBudget) -> np.ndarray:
    """Point maximizing the posterior variance over the unit cube.

    Evaluates every seed, then runs a monotone batched coordinate ascent on
    the best refine_top of them; the winner therefore never scores below any
    seed. Ascent moves are +/- step per coordinate, clipped to the cube, with
    per-candidate step halving after a sweep without improvement.
    """
    d = state.dim
    seeds = search.seeds(d)
    vals = np.atleast_1d(state.var(seeds))
    k = min(search.refine_top, seeds.shape[0])
    order = np.argsort(vals)[-k:]
    pts = seeds[order].copy()
    cur = vals[order].copy()
    step = np.full(k, search.step_init)

    for _ in range(search.max_sweeps):
        active = step >= search.step_tol
        if not active.any():
            break
        improved = np.zeros(k, dtype=bool)
        for c in range(d):
            up = pts.copy()
            dn = pts.copy()
            up[:, c] = np.minimum(up[:, c] + step, 1.0)
            dn[:, c] = np.maximum(dn[:, c] - step, 0.0)
            v = np.atleast_1d(state.var(np.vstack([up, dn])))
            v_up, v_dn = v[:k], v[k:]
            take_up = (v_up >= v_dn) & (v_up > cur) & active
            take_dn = (v_dn > v_up) & (v_dn > cur) & active
            pts[take_up] = up[take_up]
            cur[take_up] = v_up[take_up]
            pts[take_dn] = dn[take_dn]
            cur[take_dn] = v_dn[take_dn]
            improved |= take_up | take_dn
        step[~improved] *= 0.5

    return pts[int(np.argmax(cur))]


@dataclass(frozen=True)
class HyperFit:
    lengthscale: float
    scale: float
    loglik: float


def _lml_curve(e: np.ndarray, yt2: np.ndarray, xi: float, n: int):
    """Log-likelihood as a function of the scale, given an eigendecomposition
    of the unit-scale gram: eigenvalues e and squared projections yt2."""

    def lml(s: float) -> float:
        ev = s * e + xi
        return float(-0.5 * np.sum(yt2 / ev) - 0.5 * np.sum(np.log(ev)) - 0.5 * n * np.log(2 * np.pi))

    return lml


def fit_hyperparams(
    X,
    y,
    nu: float,
    xi: float,
    ls_bounds: tuple[float, float] = (0.05, 2.0),
    s_bounds: tuple[float, float] = (0.01, 100.0),
    grid_size: int = 16,
) -> HyperFit:
    """Maximize the marginal likelihood over (lengthscale, scale).

    A 16 x 16 log-spaced grid is scanned, then refined by coordinate descent
    in log space. One eigendecomposition of the unit-scale gram per candidate
    lengthscale makes every scale evaluation O(n). The returned pair attains
    the best log-likelihood among all candidates examined.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 2:
        raise FitError(f"need at least 2 observations to fit hyperparameters, got {n}")
    if X.shape[0] != n:
        raise DimensionError(f"{X.shape[0]} points but {n} observations")

    from scipy.spatial.distance import cdist

    D = cdist(X, X)
    ls_grid = np.geomspace(*ls_bounds, grid_size)
    s_grid = np.geomspace(*s_bounds, grid_size)

    curves: dict[float, object] = {}

    def curve_for(l: float):
        if l not in curves:
            U = kernels.profile(nu, D / l)
            U = 0.5 * (U + U.T)
            e, Q = eigh(U)
            e = np.clip(e, 0.0, None)
            yt2 = (Q.T @ y) ** 2
            curves[l] = _lml_curve(e, yt2, xi, n)
        return curves[l]

    best = (-np.inf, None, None)
    for l in ls_grid:
        lml = curve_for(l)
        for s in s_grid:
            v = lml(s)
            if np.isfinite(v) and v > best[0]:
                best = (v, l, s)
    if best[1] is None:
        raise FitError("no hyperparameter candidate produced a finite likelihood")

    # coordinate descent: shrink log-space brackets around the incumbent
    l_ratio = ls_grid[1] / ls_grid[0]
    s_ratio = s_grid[1] / s_grid[0]
    v, l, s = best
    for _ in range(3):
        for cand_s in s * s_ratio ** np.linspace(-1, 1, 9):
            if s_bounds[0] <= cand_s <= s_bounds[1]:
                cv = curve_for(l)(cand_s)
                if cv > v:
                    v, s = cv, float(cand_s)
        for cand_l in l * l_ratio ** np.array([-0.5, -0.25, 0.25, 0.5]):
            if ls_bounds[0] <= cand_l <= ls_bounds[1]:
                cv = curve_for(float(cand_l))(s)
                if cv > v:
                    v, l = cv, float(cand_l)
        l_ratio = l_ratio**0.5
        s_ratio = s_ratio**0.5

    return HyperFit(lengthscale=float(l), scale=float(s), loglik=float(v))
