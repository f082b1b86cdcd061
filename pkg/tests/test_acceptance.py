"""End-to-end acceptance checks, one test per shipped guarantee.

Each test prints a single summary line with the measured statistic and the
bound it must meet, and asserts both the statistic and the stated runtime
ceiling. All seeds are pinned: the suite is deterministic.
"""

import time

import numpy as np
import pytest

from ncbench.errors import ParameterError
from ncbench.estimators import (
    EstimatorConfig,
    estimate_mc,
    estimate_mvs,
    residual_estimate,
)
from ncbench.gp import GpState, SearchBudget, max_variance_point
from ncbench.hardclass import (
    BumpClassSpec,
    analytic_nc,
    delta_z,
    delta_z_bounds,
    make_instance,
    random_signs,
)
from ncbench.harness import (
    ExperimentPlan,
    deterministic_body,
    fit_rate,
    ground_truth,
    run_plan,
    summarize,
)
from ncbench.kernels import KernelSpec, cross, gram
from ncbench.objectives import NoisyOracle, get_objective
from ncbench.quadrature import (
    GridSpec,
    auto_grid,
    surrogate_partition,
    trapezoid_exp_integral,
)
from ncbench.samplers import grid_inverse_cdf_sample_1d
from ncbench.streams import RngStream


def _report(criterion: int, detail: str) -> None:
    print(f"[criterion {criterion:02d}] PASS {detail}")


def test_criterion_01_gp_oracle_equivalence():
    # Cholesky-update posterior must match a direct dense solve
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_mean = worst_var = 0.0
    for case in range(50):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 9))
        nu = (0.5, 1.5, 2.5)[case % 3]
        kernel = KernelSpec(nu, float(rng.uniform(0.1, 0.8)), float(rng.uniform(0.25, 4.0)))
        xi = (1e-8, 1e-4, 1e-2)[case % 3]
        X = rng.random((n, d))
        y = rng.normal(size=n)
        state = GpState.empty(kernel, d, xi)
        for i in range(n):
            state = state.extend(X[i], y[i])
        P = rng.random((16, d))

        K = gram(kernel, X) + xi * np.eye(n)
        Ks = cross(kernel, X, P)
        ref_mean = Ks.T @ np.linalg.solve(K, y)
        ref_var = kernel.scale - np.einsum("ij,ij->j", Ks, np.linalg.solve(K, Ks))
        worst_mean = max(worst_mean, float(np.abs(state.mean(P) - ref_mean).max()))
        worst_var = max(worst_var, float(np.abs(state.var(P) - ref_var).max()))
    elapsed = time.perf_counter() - start
    assert worst_mean <= 1e-8
    assert worst_var <= 1e-8
    assert elapsed < 5.0
    _report(1, f"max|dmean|={worst_mean:.2e} max|dvar|={worst_var:.2e} <= 1e-8 ({elapsed:.1f}s < 5s)")


def test_criterion_02_residual_unbiasedness():
    # fixed surrogate from 64 selected points, 10^4 exact inverse-CDF second
    # batches: the residual estimator's mean must hit Z/Z1 within 3 SE
    start = time.perf_counter()
    obj = get_objective("synthetic-1d")
    lam, sigma = 2.0, 0.1
    kernel = KernelSpec(2.5, *obj.fixed_hyperparams)
    root = RngStream(2002)
    state = GpState.empty(kernel, 1, sigma**2)
    oracle = NoisyOracle(obj, sigma, root.child(1))
    search = root.child(2)
    for t in range(64):
        x = max_variance_point(state, SearchBudget(rng=search.child(t)))
        state = state.extend(x, oracle.query(x))

    grid = GridSpec(1, 100_001)
    table = surrogate_partition(state, lam, grid)
    z_true = trapezoid_exp_integral(obj.eval, lam, grid)
    r_target = z_true / table.value

    n_batches, batch = 10_000, 64
    pts = grid_inverse_cdf_sample_1d(table.node_values, root.child(3), n_batches * batch)
    mu = state.mean(pts)
    y = obj.eval(pts) + sigma * root.child(4).normal(n_batches * batch)
    corr = float(np.exp(0.5 * lam**2 * sigma**2))
    weights = np.exp(lam * (mu - y))
    rhats = weights.reshape(n_batches, batch).mean(axis=1) / corr
    # the vectorised computation above must agree with the production helper
    first = residual_estimate(mu[:batch], y[:batch], lam, corr)
    assert rhats[0] == pytest.approx(first, rel=1e-12)

    se = rhats.std(ddof=1) / np.sqrt(n_batches)
    gap = abs(rhats.mean() - r_target)
    elapsed = time.perf_counter() - start
    assert gap <= 3 * se
    assert elapsed < 120.0
    _report(2, f"|mean(R)-R_true|={gap:.2e} <= 3SE={3 * se:.2e} ({elapsed:.1f}s < 2min)")


def test_criterion_03_analytic_integrals():
    start = time.perf_counter()
    # flat integrand: the surrogate integral and ground truth are exactly 1
    res = estimate_mvs(get_objective("zero-1d"), 4, EstimatorConfig(lam=3.0), RngStream(33))
    assert abs(res.z1_hat - 1.0) <= 1e-10
    for dim in (1, 2):
        value, _ = ground_truth(get_objective(f"zero-{dim}d"), 3.0)
        assert abs(value - 1.0) <= 1e-10
    # linear integrand against the closed form
    worst = 0.0
    for lam in (1.0, 10.0):
        value, _ = ground_truth(get_objective("linear-1d"), lam)
        closed = (1.0 - np.exp(-lam)) / lam
        worst = max(worst, abs(value - closed))
        assert abs(value - closed) <= 1e-6
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _report(3, f"flat exact to 1e-10; linear max|err|={worst:.2e} <= 1e-6 ({elapsed:.2f}s < 1s)")


def test_criterion_04_mc_rate(tmp_path):
    start = time.perf_counter()
    plan = ExperimentPlan(
        objective="linear-1d",
        estimators=("mc",),
        T_values=(64, 128, 256, 512, 1024, 2048, 4096),
        lambdas=(1.0,),
        sigmas=(0.0,),
        trials=100,
        master_seed=404,
        out=str(tmp_path / "c4.csv"),
    )
    fit = fit_rate(summarize(run_plan(plan)), "mc")
    elapsed = time.perf_counter() - start
    assert -0.65 <= fit.slope <= -0.35
    assert elapsed < 120.0
    _report(4, f"mc slope={fit.slope:.3f} in [-0.65, -0.35] ({elapsed:.1f}s < 2min)")


def test_criterion_05_two_batch_beats_mc(tmp_path):
    start = time.perf_counter()
    plan = ExperimentPlan(
        objective="synthetic-1d",
        estimators=("mvs-lmc", "mc"),
        T_values=(256,),
        lambdas=(0.5,),
        sigmas=(0.0,),
        trials=100,
        master_seed=505,
        out=str(tmp_path / "c5.csv"),
    )
    rows = summarize(run_plan(plan))
    med = {r.estimator: r.median_rel_error for r in rows}
    elapsed = time.perf_counter() - start
    assert med["mvs-lmc"] <= 0.5 * med["mc"]
    assert elapsed < 600.0
    _report(
        5,
        f"median rel_error mvs-lmc={med['mvs-lmc']:.2e} <= 0.5*mc={0.5 * med['mc']:.2e} "
        f"({elapsed:.0f}s < 10min)",
    )


def test_criterion_06_noiseless_rate_floor(tmp_path):
    start = time.perf_counter()
    plan = ExperimentPlan(
        objective="synthetic-1d",
        estimators=("mvs-lmc",),
        T_values=(32, 64, 128, 256, 512),
        lambdas=(0.5,),
        sigmas=(0.0,),
        trials=50,
        master_seed=606,
        out=str(tmp_path / "c6.csv"),
    )
    fit = fit_rate(summarize(run_plan(plan)), "mvs-lmc")
    elapsed = time.perf_counter() - start
    assert fit.slope <= -1.5
    assert elapsed < 900.0
    _report(6, f"mvs-lmc slope={fit.slope:.3f} <= -1.5 ({elapsed:.0f}s < 15min)")


def test_criterion_07_lambda_hardness(tmp_path):
    start = time.perf_counter()
    lambdas = (0.5, 5.0, 10.0)
    plan = ExperimentPlan(
        objective="mlp",
        estimators=("mvs-lmc",),
        T_values=(256,),
        lambdas=lambdas,
        sigmas=(0.0,),
        trials=50,
        master_seed=707,
        out=str(tmp_path / "c7.csv"),
    )
    rows = summarize(run_plan(plan))
    by_lam = {r.lam: r for r in rows}
    means = [by_lam[l].mean_rel_error for l in lambdas]
    stds = [by_lam[l].std_rel_error for l in lambdas]
    inversions = []
    for i in range(len(lambdas) - 1):
        if means[i + 1] < means[i]:
            inversions.append(means[i] - means[i + 1] <= max(stds[i], stds[i + 1]))
    elapsed = time.perf_counter() - start
    assert len(inversions) <= 1
    assert all(inversions)
    assert elapsed < 1200.0
    _report(
        7,
        f"mean rel_error over lambda {lambdas}: "
        + " -> ".join(f"{m:.3e}" for m in means)
        + f", {len(inversions)} inversion(s) within 1 std ({elapsed:.0f}s < 20min)",
    )


def test_criterion_08_hard_class_consistency():
    start = time.perf_counter()
    rng = np.random.default_rng(808)
    worst = 0.0
    for case in range(20):
        d = int(rng.integers(1, 3))
        width = float(rng.uniform(0.15, 0.5))
        lam = float(rng.uniform(0.5, 5.0))
        spec = BumpClassSpec(dim=d, width=width, nu=1.5)
        signs = random_signs(spec, seed=case, density=0.5)
        instance = make_instance(spec, signs)
        z_ref = trapezoid_exp_integral(instance.eval, lam, auto_grid(d))
        z_closed = analytic_nc(spec, signs, lam)
        rel = abs(z_closed / z_ref - 1.0)
        worst = max(worst, rel)
        assert rel <= 1e-4
        lo, hi = delta_z_bounds(spec, lam)
        dz = delta_z(spec, lam)
        assert lo <= dz <= hi
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _report(8, f"20 instances: max rel gap={worst:.2e} <= 1e-4, bounds hold ({elapsed:.0f}s < 1min)")


def test_criterion_09_noise_correction_calibration():
    start = time.perf_counter()
    obj = get_objective("zero-1d")
    lam, sigma, T, runs = 5.0, 0.1, 100_000, 100
    on = EstimatorConfig(lam=lam, sigma=sigma)
    off = EstimatorConfig(lam=lam, sigma=sigma, correct_noise=False)
    z_on = np.array([estimate_mc(obj, T, on, RngStream(900 + k)).z_hat for k in range(runs)])
    z_off = np.array([estimate_mc(obj, T, off, RngStream(900 + k)).z_hat for k in range(runs)])
    se_on = z_on.std(ddof=1) / np.sqrt(runs)
    se_off = z_off.std(ddof=1) / np.sqrt(runs)
    bias_target = float(np.exp(0.5 * lam**2 * sigma**2))  # 1.1331...
    gap_on = abs(z_on.mean() - 1.0)
    gap_off = abs(z_off.mean() - bias_target)
    elapsed = time.perf_counter() - start
    assert gap_on <= 3 * se_on
    assert gap_off <= 3 * se_off
    assert elapsed < 60.0
    _report(
        9,
        f"corrected gap={gap_on:.2e} <= 3SE={3 * se_on:.2e}; "
        f"uncorrected gap to {bias_target:.4f}: {gap_off:.2e} <= 3SE={3 * se_off:.2e} "
        f"({elapsed:.0f}s < 1min)",
    )


def test_criterion_10_worker_count_determinism(tmp_path):
    # same shape as the criterion-5 plan, reduced size, run at 1 and 8 workers
    start = time.perf_counter()
    common = dict(
        objective="synthetic-1d",
        estimators=("mvs-lmc", "mc"),
        T_values=(64,),
        lambdas=(0.5,),
        sigmas=(0.0,),
        trials=6,
        master_seed=505,
    )
    p1 = ExperimentPlan(out=str(tmp_path / "w1.csv"), **common)
    p8 = ExperimentPlan(out=str(tmp_path / "w8.csv"), **common)
    run_plan(p1, workers=1)
    run_plan(p8, workers=8)
    body1 = deterministic_body(p1.out)
    body8 = deterministic_body(p8.out)
    elapsed = time.perf_counter() - start
    assert body1 == body8
    _report(10, f"1-worker and 8-worker CSV bodies byte-identical ({elapsed:.0f}s)")
