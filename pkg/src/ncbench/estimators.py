"""Normalizing-constant estimators under a fixed query budget.

Every estimator targets Z = integral over [0,1]^d of exp(-lambda f) given a
noisy point-evaluation oracle, and reports its partition estimate together
with the number of oracle queries actually spent (never more than the
budget). The two-batch methods split the budget in half: a surrogate is
built from the first half, integrated in closed grid form, and corrected by
a sampled multiplicative residual from the second half.

Noisy observations enter exponentials as exp(-lambda y) with
y = f + sigma * z, which inflates expectations by exp(lambda^2 sigma^2 / 2);
estimators divide that factor out when correct_noise is set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, ParameterError
from .gp import GpState, SearchBudget, fit_hyperparams, max_variance_point
from .kernels import KernelSpec
from .objectives import NoisyOracle, Objective
from .quadrature import auto_grid, surrogate_partition
from .samplers import (
    LmcConfig,
    cell_inverse_cdf_sample,
    grid_inverse_cdf_sample_1d,
    lmc_sample_batch,
)
from .streams import RngStream

__all__ = [
    "EstimatorConfig",
    "EstimateResult",
    "noise_correction",
    "residual_estimate",
    "estimate_mc",
    "estimate_pc",
    "estimate_pc_mc",
    "estimate_mvs",
    "estimate_mvs_lmc",
    "ESTIMATORS",
]

# stream phases, so draw order inside an estimator never shifts between runs
_PH_POINTS = 0
_PH_NOISE = 1
_PH_SEARCH = 2
_PH_SECOND = 3

_HYPER_MODES = ("auto", "fixed", "learned")
_SECOND_BATCH = ("lmc", "exact-1d")


@dataclass(frozen=True)
class EstimatorConfig:
    """Shared knobs: inverse temperature, known noise level, surrogate
    smoothness/hyperparameter policy, Langevin settings, integration budget.

    hyper_mode "auto" uses the objective's fixed hyperparameters when it has
    them and fits by marginal likelihood otherwise; "fixed"/"learned" force
    either route. second_batch "exact-1d" replaces the Langevin sampler with
    exact inverse-CDF draws from the tabulated surrogate density (1-D only).
    """

    lam: float
    sigma: float = 0.0
    nu: float | None = None
    hyper_mode: str = "auto"
    lmc: LmcConfig = field(default_factory=LmcConfig)
    second_batch: str = "lmc"
    correct_noise: bool = True
    grid_budget: int = 100_000
    selection_lengthscale: float = 0.2
    selection_scale: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if self.sigma < 0:
            raise ParameterError(f"sigma must be non-negative, got {self.sigma}")
        if self.hyper_mode not in _HYPER_MODES:
            raise ParameterError(f"hyper_mode must be one of {_HYPER_MODES}")
        if self.second_batch not in _SECOND_BATCH:
            raise ParameterError(f"second_batch must be one of {_SECOND_BATCH}")
        if self.grid_budget < 2:
            raise ParameterError(f"grid_budget must be >= 2, got {self.grid_budget}")

    @property
    def xi(self) -> float:
        """Observation jitter: the known noise variance, floored for stability."""
        return self.sigma**2 if self.sigma > 0 else 1e-8


@dataclass(frozen=True)
class EstimateResult:
    z_hat: float
    z1_hat: float | None
    r_hat: float | None
    queries_used: int


def noise_correction(cfg: EstimatorConfig) -> float:
    """exp(lambda^2 sigma^2 / 2): the inflation a noisy draw puts on
    E[exp(-lambda y)], divided out of sample means when enabled."""
    if not cfg.correct_noise or cfg.sigma == 0.0:
        return 1.0
    return float(np.exp(0.5 * cfg.lam**2 * cfg.sigma**2))


def _safe_exp(arg: np.ndarray, what: str) -> np.ndarray:
    with np.errstate(over="ignore"):
        out = np.exp(arg)
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"{what} overflowed in exp()")
    return out


def residual_estimate(mu_vals, y_vals, lam: float, corr: float) -> float:
    """Sample mean of exp(lambda * (mu - y)) / corr over the second batch.

    With second-batch points drawn from the density proportional to
    exp(-lambda mu), its expectation is Z / Z1 (after noise correction), so
    multiplying the surrogate partition Z1 by it debiases the estimate."""
    mu_vals = np.asarray(mu_vals, dtype=float).ravel()
    y_vals = np.asarray(y_vals, dtype=float).ravel()
    if mu_vals.shape != y_vals.shape:
        raise ParameterError("mu and y batches must have equal length")
    w = _safe_exp(lam * (mu_vals - y_vals), "residual weight")
    return float(np.mean(w) / corr)


def _int_root(total: int, dim: int) -> int:
    p = max(1, int(total ** (1.0 / dim)))
    while (p + 1) ** dim <= total:
        p += 1
    while p > 1 and p**dim > total:
        p -= 1
    return p


def _check_budget(budget: int, even: bool) -> None:
    if budget < (2 if even else 1):
        raise ParameterError(f"budget must be >= {2 if even else 1}, got {budget}")
    if even and budget % 2:
        raise ParameterError(f"two-batch estimators need an even budget, got {budget}")


def _resolve_kernel(objective: Objective, cfg: EstimatorConfig) -> tuple[KernelSpec, bool]:
    """Kernel for the selection phase, and whether to refit after batch one."""
    nu = cfg.nu if cfg.nu is not None else objective.nu_default
    mode = cfg.hyper_mode
    if mode == "auto":
        mode = "fixed" if objective.fixed_hyperparams is not None else "learned"
    if mode == "fixed":
        if objective.fixed_hyperparams is None:
            raise ParameterError(f"objective {objective.name} has no fixed hyperparameters")
        ls, s = objective.fixed_hyperparams
        return KernelSpec(nu, ls, s), False
    return KernelSpec(nu, cfg.selection_lengthscale, cfg.selection_scale), True


def estimate_mc(objective: Objective, budget: int, cfg: EstimatorConfig, rng: RngStream) -> EstimateResult:
    """Plain Monte Carlo: budget uniform queries, mean of exp(-lambda y)."""
    _check_budget(budget, even=False)
    pts = rng.child(_PH_POINTS).uniform((budget, objective.dim))
    oracle = NoisyOracle(objective, cfg.sigma, rng.child(_PH_NOISE))
    y = oracle.query_batch(pts)
    z = float(np.mean(_safe_exp(-cfg.lam * y, "exp(-lambda y)")) / noise_correction(cfg))
    return EstimateResult(z, None, None, oracle.queries)


def estimate_pc(objective: Objective, budget: int, cfg: EstimatorConfig, rng: RngStream) -> EstimateResult:
    """Piecewise-constant baseline: query the floor(budget^(1/d))^d cell
    centers and integrate the induced flat surrogate exactly."""
    _check_budget(budget, even=False)
    p = _int_root(budget, objective.dim)
    centers = _cell_centers(p, objective.dim)
    oracle = NoisyOracle(objective, cfg.sigma, rng.child(_PH_NOISE))
    y = oracle.query_batch(centers)
    z = float(np.mean(_safe_exp(-cfg.lam * y, "exp(-lambda y)")) / noise_correction(cfg))
    return EstimateResult(z, None, None, oracle.queries)


def _cell_centers(p: int, dim: int) -> np.ndarray:
    axis = (np.arange(p) + 0.5) / p
    grids = np.meshgrid(*[axis] * dim, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def estimate_pc_mc(objective: Objective, budget: int, cfg: EstimatorConfig, rng: RngStream) -> EstimateResult:
    """Piecewise-constant surrogate from half the budget, then a sampled
    residual: second-batch points drawn exactly from the flat density
    proportional to exp(-lambda surrogate) by per-cell inverse CDF."""
    _check_budget(budget, even=True)
    half = budget // 2
    d = objective.dim
    p = _int_root(half, d)
    centers = _cell_centers(p, d)
    oracle = NoisyOracle(objective, cfg.sigma, rng.child(_PH_NOISE))
    y1 = oracle.query_batch(centers)
    masses = _safe_exp(-cfg.lam * y1, "surrogate cell mass")
    z1 = float(np.mean(masses))

    pts = cell_inverse_cdf_sample(masses, p, d, rng.child(_PH_SECOND), half)
    idx = np.minimum((pts * p).astype(int), p - 1)
    flat = np.zeros(half, dtype=int)
    for c in range(d):
        flat = flat * p + idx[:, c]
    surrogate_at = y1[flat]
    y2 = oracle.query_batch(pts)
    r = residual_estimate(surrogate_at, y2, cfg.lam, noise_correction(cfg))
    return EstimateResult(z1 * r, z1, r, oracle.queries)


def _run_selection(
    objective: Objective, n_select: int, cfg: EstimatorConfig, rng: RngStream
) -> tuple[GpState, NoisyOracle]:
    """Maximum-variance selection loop: pick the most uncertain point, query
    it, absorb the observation, repeat. Selection depends only on the point
    locations, never on the observed values."""
    kernel, refit = _resolve_kernel(objective, cfg)
    state = GpState.empty(kernel, objective.dim, cfg.xi)
    oracle = NoisyOracle(objective, cfg.sigma, rng.child(_PH_NOISE))
    search = rng.child(_PH_SEARCH)
    for t in range(n_select):
        x = max_variance_point(state, SearchBudget(rng=search.child(t)))
        state = state.extend(x, oracle.query(x))
    if refit and state.n >= 2:
        fitted = fit_hyperparams(state.X, state.y, kernel.nu, cfg.xi)
        state = GpState.fit(
            KernelSpec(kernel.nu, fitted.lengthscale, fitted.scale), state.X, state.y, cfg.xi
        )
    return state, oracle


def estimate_mvs(objective: Objective, budget: int, cfg: EstimatorConfig, rng: RngStream) -> EstimateResult:
    """Maximum-variance sampling only: spend the whole budget on selection
    and integrate the surrogate mean, with no residual correction."""
    _check_budget(budget, even=False)
    state, oracle = _run_selection(objective, budget, cfg, rng)
    grid = auto_grid(objective.dim, cfg.grid_budget)
    z1 = surrogate_partition(state, cfg.lam, grid).value
    return EstimateResult(z1, z1, None, oracle.queries)


def estimate_mvs_lmc(objective: Objective, budget: int, cfg: EstimatorConfig, rng: RngStream) -> EstimateResult:
    """Two-batch estimator: half the budget on maximum-variance selection to
    build the surrogate, half on samples from the surrogate's own density
    (Langevin by default, exact 1-D inverse CDF on request) to estimate the
    multiplicative residual Z / Z1."""
    _check_budget(budget, even=True)
    half = budget // 2
    state, oracle = _run_selection(objective, half, cfg, rng)
    grid = auto_grid(objective.dim, cfg.grid_budget)
    table = surrogate_partition(state, cfg.lam, grid)

    second = rng.child(_PH_SECOND)
    if cfg.second_batch == "exact-1d":
        if objective.dim != 1:
            raise ParameterError("second_batch='exact-1d' requires a 1-D objective")
        pts = grid_inverse_cdf_sample_1d(table.node_values, second, half)
    else:
        pts = lmc_sample_batch(state, cfg.lam, cfg.lmc, second, half)
    mu_at = np.atleast_1d(state.mean(pts))
    y2 = oracle.query_batch(pts)
    r = residual_estimate(mu_at, y2, cfg.lam, noise_correction(cfg))
    return EstimateResult(table.value * r, table.value, r, oracle.queries)


ESTIMATORS = {
    "mc": estimate_mc,
    "pc": estimate_pc,
    "pc-mc": estimate_pc_mc,
    "mvs": estimate_mvs,
    "mvs-lmc": estimate_mvs_lmc,
}
