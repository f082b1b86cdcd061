import json
import math

import numpy as np
import pytest

from ncbench.errors import FitError, ParameterError, PlanError
from ncbench.harness import (
    CSV_COLUMNS,
    DEFAULT_RATE_SWEEP,
    EstimateRecord,
    ExperimentPlan,
    SummaryRow,
    deterministic_body,
    fit_rate,
    ground_truth,
    parse_plan,
    read_records,
    run_plan,
    summarize,
    theory_exponent_for,
    write_summary_csv,
)
from ncbench.objectives import get_objective

PLAN_TEXT = """
# comparison sweep
objective = zero-1d
estimators = mc, pc
T = 8, 16
lambda = 2.0, 0.5
sigma = 0, 0.1
nu = 1.5
trials = 3
seed = 11
out = {out}
"""


def _plan(tmp_path, **overrides):
    base = dict(
        objective="zero-1d",
        estimators=("mc",),
        T_values=(8,),
        lambdas=(2.0,),
        master_seed=5,
        trials=1,
        out=str(tmp_path / "res.csv"),
    )
    base.update(overrides)
    return ExperimentPlan(**base)


def test_parse_plan_full_roundtrip(tmp_path):
    out = str(tmp_path / "r.csv")
    plan = parse_plan(PLAN_TEXT.format(out=out))
    assert plan.objective == "zero-1d"
    assert plan.estimators == ("mc", "pc")
    assert plan.T_values == (8, 16)
    assert plan.lambdas == (2.0, 0.5)
    assert plan.sigmas == (0.0, 0.1)
    assert plan.nu == 1.5
    assert plan.trials == 3
    assert plan.master_seed == 11
    assert plan.out == out
    assert plan.n_cells == 2 * 2 * 2 * 2 * 3


def test_parse_plan_defaults():
    plan = parse_plan("objective=zero-1d\nestimators=mc\nT=4\nlambda=1\nout=x.csv")
    assert plan.sigmas == (0.0,)
    assert plan.nu is None
    assert plan.trials == 100
    assert plan.master_seed == 0


@pytest.mark.parametrize(
    "text",
    [
        "objective=zero-1d\nestimators=mc\nT=4\nlambda=1",  # missing out
        "objective=zero-1d\nestimators=mc\nT=4\nlambda=1\nout=x\nbudget=3",  # unknown key
        "objective=zero-1d\nestimators=mc\nT=4\nT=8\nlambda=1\nout=x",  # duplicate
        "objective=zero-1d\nestimators=mc\nT=four\nlambda=1\nout=x",  # bad int
        "objective=zero-1d\nestimators=warp\nT=4\nlambda=1\nout=x",  # bad estimator
        "objective=nope-3x\nestimators=mc\nT=4\nlambda=1\nout=x",  # bad objective
        "objective=zero-1d\nestimators=mc\nT=4\nlambda=0\nout=x",  # lambda <= 0
        "objective=zero-1d\nestimators=mc\nT=4\nlambda=1\ntrials=0\nout=x",  # trials < 1
        "objective=zero-1d estimators=mc",  # two keys mangled onto one line
    ],
)
def test_parse_plan_rejects(text):
    with pytest.raises(PlanError):
        parse_plan(text)


def test_single_mc_row_on_zero_energy(tmp_path):
    # flat integrand: every sample is exp(0) = 1, so the estimate is exact
    plan = _plan(tmp_path)
    records = run_plan(plan)
    assert len(records) == 1
    rec = records[0]
    assert rec.rel_error <= 1e-12
    assert rec.z_true == pytest.approx(1.0, abs=1e-12)
    assert rec.failed == 0
    assert rec.queries_used == 8
    with open(plan.out) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2


def test_row_cardinality_and_order(tmp_path):
    plan = _plan(tmp_path, estimators=("mc", "pc"), T_values=(4, 8), trials=3)
    records = run_plan(plan)
    assert len(records) == 12
    # estimator-major, then T, then trial
    assert [r.estimator for r in records] == ["mc"] * 6 + ["pc"] * 6
    assert [r.T for r in records[:6]] == [4, 4, 4, 8, 8, 8]
    assert [r.trial for r in records[:3]] == [0, 1, 2]
    assert all(r.seed == 5 for r in records)


def test_csv_roundtrip_through_reader(tmp_path):
    plan = _plan(tmp_path, objective="synthetic-1d", estimators=("mc", "pc-mc"),
                 T_values=(8,), sigmas=(0.1,), trials=2)
    records = run_plan(plan)
    back = read_records(plan.out)
    assert back == records


def test_rerun_same_seed_identical_body(tmp_path):
    p1 = _plan(tmp_path, objective="synthetic-1d", trials=3, out=str(tmp_path / "a.csv"))
    p2 = _plan(tmp_path, objective="synthetic-1d", trials=3, out=str(tmp_path / "b.csv"))
    run_plan(p1)
    run_plan(p2)
    assert deterministic_body(p1.out) == deterministic_body(p2.out)


def test_worker_count_does_not_change_body(tmp_path):
    kw = dict(objective="synthetic-1d", estimators=("mc", "pc-mc"), T_values=(8, 16), trials=2)
    p1 = _plan(tmp_path, out=str(tmp_path / "w1.csv"), **kw)
    p4 = _plan(tmp_path, out=str(tmp_path / "w4.csv"), **kw)
    run_plan(p1, workers=1)
    run_plan(p4, workers=4)
    assert deterministic_body(p1.out) == deterministic_body(p4.out)


def test_failed_cell_is_recorded_and_run_continues(tmp_path):
    # pc-mc needs an even budget, so T=7 fails while mc succeeds
    plan = _plan(tmp_path, estimators=("mc", "pc-mc"), T_values=(7,), trials=2)
    records = run_plan(plan)
    by_est = {name: [r for r in records if r.estimator == name] for name in ("mc", "pc-mc")}
    assert all(r.failed == 0 for r in by_est["mc"])
    assert all(r.failed == 1 for r in by_est["pc-mc"])
    assert all(r.z_hat is None and r.rel_error is None for r in by_est["pc-mc"])
    manifest = json.load(open(plan.out + ".manifest.json"))
    assert len(manifest["failures"]) == 2
    assert "ParameterError" in manifest["failures"][0]["error"]
    back = read_records(plan.out)
    assert back == records


def test_manifest_contents(tmp_path):
    plan = _plan(tmp_path, lambdas=(2.0, 0.5))
    run_plan(plan)
    manifest = json.load(open(plan.out + ".manifest.json"))
    assert manifest["plan"]["objective"] == "zero-1d"
    assert manifest["n_rows"] == 2
    truth = manifest["ground_truth"]
    assert set(truth) == {"2.0", "0.5"}
    assert truth["2.0"]["method"] == "trapezoid"
    assert truth["2.0"]["approximate"] is False
    assert truth["2.0"]["value"] == pytest.approx(1.0, abs=1e-12)


def test_ground_truth_switches_to_sobol_in_high_dim():
    value, info = ground_truth(get_objective("zero-5d"), 1.0)
    assert info["method"] == "sobol"
    assert info["approximate"] is True
    assert value == pytest.approx(1.0, abs=1e-9)
    g_value, g_info = ground_truth(get_objective("zero-2d"), 1.0)
    assert g_info["method"] == "trapezoid"
    assert g_value == pytest.approx(1.0, abs=1e-12)


def test_deterministic_body_zeroes_only_wall_ms(tmp_path):
    plan = _plan(tmp_path)
    run_plan(plan)
    body = deterministic_body(plan.out)
    lines = body.split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    wall_idx = CSV_COLUMNS.index("wall_ms")
    fields = lines[1].split(",")
    assert fields[wall_idx] == "0"
    raw = open(plan.out).read().split("\n")[1].split(",")
    raw[wall_idx] = "0"
    assert fields == raw


def _rec(estimator="mc", T=8, rel_error=0.1, trial=0, failed=0, lam=1.0,
         sigma=0.0, nu=1.5, objective="zero-1d", d=1):
    return EstimateRecord(
        estimator=estimator, objective=objective, d=d, nu=nu, lam=lam,
        sigma=sigma, T=T, trial=trial, seed=0, z1_hat=None, r_hat=None,
        z_hat=None if failed else 1.0, z_true=1.0,
        rel_error=None if failed else rel_error, queries_used=T,
        wall_ms=1.0, failed=failed,
    )


def test_summarize_single_and_pair():
    rows = summarize([_rec(rel_error=0.25)])
    assert len(rows) == 1
    r = rows[0]
    assert (r.mean_rel_error, r.median_rel_error, r.std_rel_error) == (0.25, 0.25, 0.0)
    assert (r.n, r.n_failed) == (1, 0)

    rows = summarize([_rec(rel_error=0.1, trial=0), _rec(rel_error=0.3, trial=1)])
    assert rows[0].mean_rel_error == pytest.approx(0.2, rel=1e-15)


def test_summarize_matches_independent_recomputation():
    # spreadsheet-style recomputation with explicit loops, no numpy stats
    vals = np.random.default_rng(3).uniform(0.01, 2.0, 100)
    recs = [_rec(rel_error=float(v), trial=i) for i, v in enumerate(vals)]
    row = summarize(recs)[0]
    mean = sum(vals) / len(vals)
    var = sum((v - mean) ** 2 for v in vals) / len(vals)
    ordered = sorted(vals)
    median = (ordered[49] + ordered[50]) / 2
    assert row.mean_rel_error == pytest.approx(mean, rel=1e-12)
    assert row.std_rel_error == pytest.approx(math.sqrt(var), rel=1e-12)
    assert row.median_rel_error == pytest.approx(median, rel=1e-12)


def test_summarize_excludes_and_counts_failures():
    recs = [_rec(rel_error=0.5, trial=0), _rec(trial=1, failed=1)]
    row = summarize(recs)[0]
    assert (row.n, row.n_failed) == (1, 1)
    assert row.mean_rel_error == 0.5
    with pytest.warns(UserWarning):
        assert summarize([_rec(failed=1)]) == []


def test_summarize_groups_by_cell():
    recs = [
        _rec(estimator="mc", T=8, rel_error=0.1),
        _rec(estimator="mc", T=16, rel_error=0.2),
        _rec(estimator="pc", T=8, rel_error=0.3),
        _rec(estimator="mc", T=8, rel_error=0.2, sigma=0.1),
    ]
    rows = summarize(recs)
    keys = {(r.estimator, r.T, r.sigma) for r in rows}
    assert keys == {("mc", 8, 0.0), ("mc", 16, 0.0), ("pc", 8, 0.0), ("mc", 8, 0.1)}


def _summary_rows(errors_by_T, estimator="mc", sigma=0.0, nu=1.5, d=1):
    return [
        SummaryRow(estimator=estimator, objective="zero-1d", d=d, nu=nu,
                   lam=1.0, sigma=sigma, T=T, n=100, n_failed=0,
                   mean_rel_error=err, std_rel_error=0.0, median_rel_error=err)
        for T, err in errors_by_T.items()
    ]


def test_fit_rate_exact_power_law():
    rows = _summary_rows({T: 0.7 * T**-0.5 for T in DEFAULT_RATE_SWEEP})
    fit = fit_rate(rows, "mc")
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(0.7), abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-12)
    assert fit.T_range == DEFAULT_RATE_SWEEP


def test_fit_rate_constant_errors_flat_slope():
    rows = _summary_rows({T: 0.2 for T in (32, 64, 128)})
    fit = fit_rate(rows, "mc")
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_theory_exponents():
    noiseless = fit_rate(_summary_rows({32: 0.4, 64: 0.2, 128: 0.1}, nu=2.5, d=1), "mc")
    assert noiseless.theory_exponent == pytest.approx(-3.5)
    noisy = fit_rate(_summary_rows({32: 0.4, 64: 0.2, 128: 0.1}, sigma=0.1), "mc")
    assert noisy.theory_exponent == pytest.approx(-0.5)
    assert theory_exponent_for(0.0, 1.5, 2) == pytest.approx(-1.75)
    bare = fit_rate(_summary_rows({32: 0.4, 64: 0.2, 128: 0.1}), "mc", attach_theory=False)
    assert bare.theory_exponent is None


def test_fit_rate_rejects_bad_input():
    with pytest.raises(FitError):
        fit_rate(_summary_rows({32: 0.4, 64: 0.2}), "mc")  # too few points
    with pytest.raises(FitError):
        fit_rate(_summary_rows({32: 0.4, 64: 0.2, 128: 0.0}), "mc")  # zero error
    with pytest.raises(FitError):
        fit_rate(_summary_rows({32: 0.4, 64: 0.2, 128: 0.1}), "mvs")  # absent
    mixed = _summary_rows({32: 0.4, 64: 0.2, 128: 0.1}, sigma=0.0) + _summary_rows(
        {256: 0.05}, sigma=0.1
    )
    with pytest.raises(ParameterError):
        fit_rate(mixed, "mc")


def test_fit_rate_respects_T_filter():
    rows = _summary_rows({32: 0.4, 64: 0.2, 128: 0.1, 256: 9.0})
    fit = fit_rate(rows, "mc", T_values=(32, 64, 128))
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.T_range == (32, 64, 128)


def test_write_summary_csv(tmp_path):
    rows = _summary_rows({32: 0.4, 64: 0.2})
    path = str(tmp_path / "summary.csv")
    write_summary_csv(rows, path)
    lines = open(path).read().splitlines()
    assert lines[0].startswith("estimator,objective,d,nu,lambda,sigma,T,n,")
    assert len(lines) == 3
    assert lines[1].split(",")[6] == "32"


def test_run_plan_validates_workers(tmp_path):
    with pytest.raises(ParameterError):
        run_plan(_plan(tmp_path), workers=0)


def test_run_plan_bad_output_path(tmp_path):
    plan = _plan(tmp_path, out=str(tmp_path / "missing-dir" / "res.csv"))
    with pytest.raises(PlanError):
        run_plan(plan)
