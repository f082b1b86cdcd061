"""Experiment orchestration: plans, parallel cell execution, CSV and
manifest emission, aggregation, and convergence-rate fitting.

A plan is a grid of (estimator, T, lambda, sigma, trial) cells over one
objective. Each cell derives its own random stream from (master_seed,
cell_index), so results are reproducible and independent of the worker
count; rows are written in cell order regardless of completion order.
"""

from __future__ import annotations

import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from math import sqrt

import numpy as np

from . import __version__
from .errors import FitError, ParameterError, PlanError
from .estimators import ESTIMATORS, EstimatorConfig
from .objectives import Objective, get_objective
from .quadrature import auto_grid, low_discrepancy_exp_integral, trapezoid_exp_integral
from .streams import RngStream

__all__ = [
    "CSV_COLUMNS",
    "DEFAULT_RATE_SWEEP",
    "ExperimentPlan",
    "EstimateRecord",
    "SummaryRow",
    "RateFit",
    "parse_plan",
    "load_plan",
    "ground_truth",
    "run_plan",
    "read_records",
    "deterministic_body",
    "summarize",
    "write_summary_csv",
    "fit_rate",
    "theory_exponent_for",
]

CSV_COLUMNS = (
    "estimator", "objective", "d", "nu", "lambda", "sigma", "T", "trial",
    "seed", "z1_hat", "r_hat", "z_hat", "z_true", "rel_error",
    "queries_used", "wall_ms", "failed",
)

# tensor grids are usable ground truth up to this dimension; above it the
# harness falls back to a Sobol average and flags the value approximate
_GRID_TRUTH_MAX_DIM = 4
_SOBOL_TRUTH_NODES = 2**20

_MAX_WORKERS = 64

# default budget ladder for convergence-slope checks
DEFAULT_RATE_SWEEP = (32, 64, 128, 256, 512)


@dataclass(frozen=True)
class ExperimentPlan:
    objective: str
    estimators: tuple[str, ...]
    T_values: tuple[int, ...]
    lambdas: tuple[float, ...]
    sigmas: tuple[float, ...] = (0.0,)
    nu: float | None = None
    trials: int = 100
    master_seed: int = 0
    out: str = "results.csv"

    def __post_init__(self):
        if not self.estimators:
            raise PlanError("estimators must be non-empty")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise PlanError(f"unknown estimator {name!r}; known: {sorted(ESTIMATORS)}")
        if not self.T_values or any(t < 1 for t in self.T_values):
            raise PlanError("T values must be a non-empty list of positive integers")
        if not self.lambdas or any(l <= 0 for l in self.lambdas):
            raise PlanError("lambda values must be a non-empty list of positive reals")
        if not self.sigmas or any(s < 0 for s in self.sigmas):
            raise PlanError("sigma values must be non-empty and non-negative")
        if self.nu is not None and self.nu <= 0:
            raise PlanError(f"nu must be positive, got {self.nu}")
        if self.trials < 1:
            raise PlanError(f"trials must be >= 1, got {self.trials}")
        if not self.out:
            raise PlanError("output path must be non-empty")
        try:
            get_objective(self.objective)
        except (KeyError, ParameterError) as e:
            raise PlanError(f"objective {self.objective!r} not usable: {e}") from e

    @property
    def n_cells(self) -> int:
        return (len(self.estimators) * len(self.T_values) * len(self.lambdas)
                * len(self.sigmas) * self.trials)


@dataclass(frozen=True)
class EstimateRecord:
    estimator: str
    objective: str
    d: int
    nu: float
    lam: float
    sigma: float
    T: int
    trial: int
    seed: int
    z1_hat: float | None
    r_hat: float | None
    z_hat: float | None
    z_true: float
    rel_error: float | None
    queries_used: int
    wall_ms: float
    failed: int


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    objective: str
    d: int
    nu: float
    lam: float
    sigma: float
    T: int
    n: int
    n_failed: int
    mean_rel_error: float
    std_rel_error: float
    median_rel_error: float


@dataclass(frozen=True)
class RateFit:
    estimator: str
    slope: float
    intercept: float
    stderr: float
    theory_exponent: float | None
    T_range: tuple[int, ...]


# ---------------------------------------------------------------------------
# plan files


_LIST_KEYS = {"estimators": str, "T": int, "lambda": float, "sigma": float}
_SCALAR_KEYS = {"objective": str, "nu": float, "trials": int, "seed": int, "out": str}
_REQUIRED = ("objective", "estimators", "T", "lambda", "out")


def parse_plan(text: str) -> ExperimentPlan:
    """Flat key = value format. '#' starts a comment, list values are
    comma-separated. Required keys: objective, estimators, T, lambda, out."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PlanError(f"plan line {lineno}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in raw:
            raise PlanError(f"plan line {lineno}: duplicate key {key!r}")
        if key not in _LIST_KEYS and key not in _SCALAR_KEYS:
            raise PlanError(f"plan line {lineno}: unknown key {key!r}")
        if not val:
            raise PlanError(f"plan line {lineno}: empty value for {key!r}")
        raw[key] = val

    for key in _REQUIRED:
        if key not in raw:
            raise PlanError(f"plan is missing required key {key!r}")

    def convert(key: str, kind, token: str):
        try:
            return kind(token)
        except ValueError as e:
            raise PlanError(f"plan key {key!r}: cannot parse {token!r} as {kind.__name__}") from e

    lists = {
        key: tuple(convert(key, kind, tok.strip()) for tok in raw[key].split(","))
        for key, kind in _LIST_KEYS.items()
        if key in raw
    }
    scalars = {
        key: convert(key, kind, raw[key]) for key, kind in _SCALAR_KEYS.items() if key in raw
    }

    kwargs = {
        "objective": scalars["objective"],
        "estimators": lists["estimators"],
        "T_values": lists["T"],
        "lambdas": lists["lambda"],
        "out": scalars["out"],
    }
    if "sigma" in lists:
        kwargs["sigmas"] = lists["sigma"]
    if "nu" in scalars:
        kwargs["nu"] = scalars["nu"]
    if "trials" in scalars:
        kwargs["trials"] = scalars["trials"]
    if "seed" in scalars:
        kwargs["master_seed"] = scalars["seed"]
    return ExperimentPlan(**kwargs)


def load_plan(path: str) -> ExperimentPlan:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise PlanError(f"cannot read plan file {path}: {e}") from e
    return parse_plan(text)


# ---------------------------------------------------------------------------
# ground truth


def ground_truth(objective: Objective, lam: float, grid_budget: int = 100_000):
    """Reference value of the partition integral and a description of how it
    was obtained. Tensor-grid trapezoid where the dimension allows it, Sobol
    average (flagged approximate) above that."""
    if objective.dim <= _GRID_TRUTH_MAX_DIM:
        grid = auto_grid(objective.dim, grid_budget)
        value = trapezoid_exp_integral(objective.eval, lam, grid)
        info = {
            "method": "trapezoid",
            "points_per_dim": grid.points_per_dim,
            "n_nodes": grid.n_nodes,
            "approximate": False,
        }
    else:
        value = low_discrepancy_exp_integral(objective.eval, lam, objective.dim, _SOBOL_TRUTH_NODES)
        info = {"method": "sobol", "n_nodes": _SOBOL_TRUTH_NODES, "approximate": True}
    return value, info


# ---------------------------------------------------------------------------
# execution


def _cells(plan: ExperimentPlan):
    idx = 0
    for est in plan.estimators:
        for T in plan.T_values:
            for lam in plan.lambdas:
                for sigma in plan.sigmas:
                    for trial in range(plan.trials):
                        yield idx, est, T, lam, sigma, trial
                        idx += 1


def _run_cell(args):
    """One estimator invocation; runs in a worker process. Never raises:
    failures come back as flagged tuples so one bad cell cannot end a run."""
    objective_id, est_name, T, lam, sigma, nu, master_seed, cell_index = args
    start = time.perf_counter()
    try:
        objective = get_objective(objective_id)
        cfg = EstimatorConfig(lam=lam, sigma=sigma, nu=nu)
        rng = RngStream(master_seed, (cell_index,))
        res = ESTIMATORS[est_name](objective, T, cfg, rng)
        if res.queries_used > T:
            raise RuntimeError(
                f"estimator overspent its budget: {res.queries_used} > {T}"
            )
        wall_ms = (time.perf_counter() - start) * 1000.0
        return (cell_index, res.z1_hat, res.r_hat, res.z_hat, res.queries_used, wall_ms, 0, "")
    except Exception as e:  # noqa: BLE001 - cell isolation is the contract
        wall_ms = (time.perf_counter() - start) * 1000.0
        return (cell_index, None, None, None, 0, wall_ms, 1, f"{type(e).__name__}: {e}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _record_to_line(rec: EstimateRecord) -> str:
    vals = (
        rec.estimator, rec.objective, rec.d, rec.nu, rec.lam, rec.sigma,
        rec.T, rec.trial, rec.seed, rec.z1_hat, rec.r_hat, rec.z_hat,
        rec.z_true, rec.rel_error, rec.queries_used, rec.wall_ms, rec.failed,
    )
    return ",".join(_fmt(v) for v in vals)


def run_plan(plan: ExperimentPlan, workers: int = 1) -> list[EstimateRecord]:
    """Execute every cell, append rows to plan.out in cell order, and write a
    manifest sidecar. Returns the records in the same order."""
    if not 1 <= workers <= _MAX_WORKERS:
        raise ParameterError(f"workers must be in [1, {_MAX_WORKERS}], got {workers}")
    objective = get_objective(plan.objective)
    nu = plan.nu if plan.nu is not None else objective.nu_default

    truth: dict[float, float] = {}
    truth_info: dict[str, dict] = {}
    for lam in plan.lambdas:
        if lam not in truth:
            value, info = ground_truth(objective, lam)
            truth[lam] = value
            truth_info[repr(float(lam))] = {"value": value, **info}

    cells = list(_cells(plan))
    args = [
        (plan.objective, est, T, lam, sigma, plan.nu, plan.master_seed, idx)
        for idx, est, T, lam, sigma, _trial in cells
    ]

    records: list[EstimateRecord] = []
    failures: list[dict] = []
    try:
        out_fh = open(plan.out, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise PlanError(f"cannot write result CSV {plan.out}: {e}") from e
    with out_fh as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        if workers == 1:
            outcomes = map(_run_cell, args)
        else:
            pool = ProcessPoolExecutor(max_workers=workers)
            outcomes = pool.map(_run_cell, args)
        try:
            for cell, outcome in zip(cells, outcomes):
                idx, est, T, lam, sigma, trial = cell
                _, z1, r, z, queries, wall_ms, failed, err = outcome
                z_true = truth[lam]
                rel = abs(z / z_true - 1.0) if not failed else None
                rec = EstimateRecord(
                    estimator=est, objective=plan.objective, d=objective.dim,
                    nu=nu, lam=lam, sigma=sigma, T=T, trial=trial,
                    seed=plan.master_seed, z1_hat=z1, r_hat=r, z_hat=z,
                    z_true=z_true, rel_error=rel, queries_used=queries,
                    wall_ms=wall_ms, failed=failed,
                )
                records.append(rec)
                fh.write(_record_to_line(rec) + "\n")
                fh.flush()
                if failed:
                    failures.append({"row": idx, "error": err})
        finally:
            if workers > 1:
                pool.shutdown()

    manifest = {
        "code_version": __version__,
        "plan": asdict(plan),
        "workers": workers,
        "ground_truth": truth_info,
        "hyperparameters": "learned hyperparameters are refit independently in every trial",
        "n_rows": len(records),
        "failures": failures,
    }
    with open(plan.out + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return records


# ---------------------------------------------------------------------------
# reading and aggregation


def _parse_cell(col: str, token: str):
    if token == "":
        return None
    if col in ("d", "T", "trial", "seed", "queries_used", "failed"):
        return int(token)
    if col in ("estimator", "objective"):
        return token
    return float(token)


def read_records(path: str) -> list[EstimateRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0].split(",") != list(CSV_COLUMNS):
        raise ParameterError(f"{path} does not carry the expected result header")
    records = []
    for ln in lines[1:]:
        tokens = ln.split(",")
        if len(tokens) != len(CSV_COLUMNS):
            raise ParameterError(f"malformed result row: {ln!r}")
        kv = {col: _parse_cell(col, tok) for col, tok in zip(CSV_COLUMNS, tokens)}
        records.append(
            EstimateRecord(
                estimator=kv["estimator"], objective=kv["objective"], d=kv["d"],
                nu=kv["nu"], lam=kv["lambda"], sigma=kv["sigma"], T=kv["T"],
                trial=kv["trial"], seed=kv["seed"], z1_hat=kv["z1_hat"],
                r_hat=kv["r_hat"], z_hat=kv["z_hat"], z_true=kv["z_true"],
                rel_error=kv["rel_error"], queries_used=kv["queries_used"],
                wall_ms=kv["wall_ms"], failed=kv["failed"],
            )
        )
    return records


def deterministic_body(path: str) -> str:
    """CSV content with the wall_ms column zeroed: the part of a result file
    that must be byte-identical across reruns and worker counts."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    header = lines[0].split(",")
    try:
        wall_idx = header.index("wall_ms")
    except ValueError as e:
        raise ParameterError(f"{path} has no wall_ms column") from e
    out = [lines[0]]
    for ln in lines[1:]:
        if not ln:
            out.append(ln)
            continue
        f = ln.split(",")
        f[wall_idx] = "0"
        out.append(",".join(f))
    return "\n".join(out)


def summarize(records: list[EstimateRecord]) -> list[SummaryRow]:
    """Per-(estimator, objective, T, lambda, sigma, nu) mean/std/median of
    rel_error over non-failed rows; failed rows are counted, not averaged."""
    groups: dict[tuple, list[EstimateRecord]] = {}
    for rec in records:
        key = (rec.estimator, rec.objective, rec.nu, rec.lam, rec.sigma, rec.T)
        groups.setdefault(key, []).append(rec)
    rows = []
    for key in sorted(groups):
        cell = groups[key]
        ok = [r.rel_error for r in cell if not r.failed]
        n_failed = sum(r.failed for r in cell)
        if not ok:
            warnings.warn(f"cell {key} has no successful rows; omitted from summary")
            continue
        vals = np.asarray(ok, dtype=float)
        rows.append(
            SummaryRow(
                estimator=key[0], objective=key[1], d=cell[0].d, nu=key[2],
                lam=key[3], sigma=key[4], T=key[5], n=len(ok),
                n_failed=int(n_failed), mean_rel_error=float(vals.mean()),
                std_rel_error=float(vals.std(ddof=0)),
                median_rel_error=float(np.median(vals)),
            )
        )
    return rows


SUMMARY_COLUMNS = (
    "estimator", "objective", "d", "nu", "lambda", "sigma", "T", "n",
    "n_failed", "mean_rel_error", "std_rel_error", "median_rel_error",
)


def write_summary_csv(rows: list[SummaryRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            vals = (r.estimator, r.objective, r.d, r.nu, r.lam, r.sigma, r.T,
                    r.n, r.n_failed, r.mean_rel_error, r.std_rel_error,
                    r.median_rel_error)
            fh.write(",".join(_fmt(v) for v in vals) + "\n")


# ---------------------------------------------------------------------------
# rate fitting


def theory_exponent_for(sigma: float, nu: float, d: int) -> float:
    """Reference convergence exponent for a fixed-lambda sweep: the matched
    noiseless rate -(nu/d) - 1, or -1/2 once constant observation noise
    dominates."""
    return -(nu / d) - 1.0 if sigma == 0 else -0.5


def fit_rate(
    summary: list[SummaryRow], estimator: str, T_values=None, attach_theory: bool = True
) -> RateFit:
    """Least-squares slope of log mean rel_error against log T.

    The filtered rows must form a single sweep: one objective and one
    (nu, lambda, sigma) setting, at least three distinct T values, all with
    positive mean error (an exact estimator has no finite log-log slope)."""
    rows = [r for r in summary if r.estimator == estimator]
    if T_values is not None:
        wanted = set(T_values)
        rows = [r for r in rows if r.T in wanted]
    if not rows:
        raise FitError(f"no summary rows for estimator {estimator!r}")
    settings = {(r.objective, r.nu, r.lam, r.sigma) for r in rows}
    if len(settings) > 1:
        raise ParameterError(
            f"rate fit needs a single (objective, nu, lambda, sigma) setting; got {len(settings)}"
        )
    by_T = {}
    for r in rows:
        if r.T in by_T:
            raise ParameterError(f"duplicate summary row for T={r.T}")
        by_T[r.T] = r.mean_rel_error
    if len(by_T) < 3:
        raise FitError(f"rate fit needs >= 3 distinct T values, got {len(by_T)}")
    if any(m <= 0 for m in by_T.values()):
        raise FitError("mean rel_error must be positive for a log-log fit")

    Ts = sorted(by_T)
    x = np.log([float(t) for t in Ts])
    y = np.log([by_T[t] for t in Ts])
    n = len(Ts)
    xbar, ybar = x.mean(), y.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - ybar)).sum() / sxx)
    intercept = float(ybar - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = n - 2
    stderr = sqrt(float((resid**2).sum()) / dof / sxx) if dof > 0 else 0.0

    theory = None
    if attach_theory:
        any_row = rows[0]
        theory = theory_exponent_for(any_row.sigma, any_row.nu, any_row.d)
    return RateFit(
        estimator=estimator, slope=slope, intercept=intercept, stderr=stderr,
        theory_exponent=theory, T_range=tuple(Ts),
    )
