"""Command-line front end.

Subcommands: run a plan file, fit convergence rates from a result CSV,
print ground truth for an objective, summarize a result CSV, and list the
objective registry. Exit codes: 0 clean, 2 bad plan or arguments, 3 when a
run recorded failed cells.
"""

from __future__ import annotations

import argparse
import sys

from .errors import FitError, ParameterError, PlanError
from .estimators import ESTIMATORS
from .harness import (
    fit_rate,
    ground_truth,
    load_plan,
    read_records,
    run_plan,
    summarize,
    write_summary_csv,
)
from .objectives import get_objective, list_objectives

EXIT_OK = 0
EXIT_PLAN_ERROR = 2
EXIT_HAD_FAILURES = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncbench",
        description="Normalizing-constant estimation benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a plan file and write a result CSV")
    p_run.add_argument("plan", help="path to a key = value plan file")
    p_run.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")

    p_rates = sub.add_parser("rates", help="fit log-log convergence slopes from a result CSV")
    p_rates.add_argument("csv", help="result CSV produced by 'run'")
    p_rates.add_argument("--estimator", action="append", default=None,
                         help="estimator to fit (repeatable; default: all present)")
    p_rates.add_argument("--theory", action="store_true",
                         help="print the reference exponent for the sweep's regime")
    p_rates.add_argument("--lambda", dest="lam", type=float, default=None,
                         help="restrict to one lambda value")
    p_rates.add_argument("--sigma", type=float, default=None, help="restrict to one sigma value")
    p_rates.add_argument("--T", type=int, action="append", default=None,
                         help="restrict the sweep to these T values (repeatable)")

    p_truth = sub.add_parser("groundtruth", help="print the reference partition value")
    p_truth.add_argument("objective", help="objective id, see list-functions")
    p_truth.add_argument("--lambda", dest="lam", type=float, required=True)

    p_sum = sub.add_parser("summarize", help="aggregate a result CSV per cell")
    p_sum.add_argument("csv", help="result CSV produced by 'run'")
    p_sum.add_argument("--out", default=None, help="write the summary CSV here instead of stdout")

    sub.add_parser("list-functions", help="list registered objective ids")
    return parser


def _cmd_run(args) -> int:
    plan = load_plan(args.plan)
    records = run_plan(plan, workers=args.workers)
    n_failed = sum(r.failed for r in records)
    print(f"wrote {len(records)} rows to {plan.out} ({n_failed} failed)")
    if n_failed:
        print(f"failure details: {plan.out}.manifest.json", file=sys.stderr)
        return EXIT_HAD_FAILURES
    return EXIT_OK


def _cmd_rates(args) -> int:
    records = read_records(args.csv)
    if args.lam is not None:
        records = [r for r in records if r.lam == args.lam]
    if args.sigma is not None:
        records = [r for r in records if r.sigma == args.sigma]
    if not records:
        raise ParameterError("no rows left after filtering")
    summary = summarize(records)
    names = args.estimator or sorted({r.estimator for r in summary})
    for name in names:
        if name not in ESTIMATORS:
            raise ParameterError(f"unknown estimator {name!r}")
        fit = fit_rate(summary, name, T_values=args.T, attach_theory=args.theory)
        line = (
            f"{name}: slope={fit.slope:.4f} stderr={fit.stderr:.4f} "
            f"intercept={fit.intercept:.4f} T={list(fit.T_range)}"
        )
        if args.theory:
            line += f" theory_exponent={fit.theory_exponent:.4f}"
        print(line)
    return EXIT_OK


def _cmd_groundtruth(args) -> int:
    objective = get_objective(args.objective)
    value, info = ground_truth(objective, args.lam)
    print(f"objective={objective.name} d={objective.dim} lambda={args.lam!r}")
    print(f"Z_true={value!r}")
    detail = " ".join(f"{k}={v}" for k, v in info.items())
    print(detail)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    rows = summarize(read_records(args.csv))
    if args.out:
        write_summary_csv(rows, args.out)
        print(f"wrote {len(rows)} summary rows to {args.out}")
    else:
        for r in rows:
            print(
                f"{r.estimator} {r.objective} T={r.T} lambda={r.lam!r} sigma={r.sigma!r} "
                f"nu={r.nu!r} n={r.n} n_failed={r.n_failed} mean={r.mean_rel_error!r} "
                f"std={r.std_rel_error!r} median={r.median_rel_error!r}"
            )
    return EXIT_OK


def _cmd_list_functions(_args) -> int:
    rows = list_objectives()
    width = max(len(pattern) for pattern, _ in rows)
    for pattern, description in rows:
        print(f"{pattern.ljust(width)}  {description}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "rates": _cmd_rates,
    "groundtruth": _cmd_groundtruth,
    "summarize": _cmd_summarize,
    "list-functions": _cmd_list_functions,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (PlanError, ParameterError, FitError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_PLAN_ERROR


if __name__ == "__main__":
    sys.exit(main())
