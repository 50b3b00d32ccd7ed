"""Command line entry point: ``hdbo run`` and ``hdbo analyze``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analysis
from .errors import SetupError
from .harness import PLAN_FIELDS, ExperimentPlan, run_experiment
from .registry import get_solver, solver_names


def int_list(text: str) -> list[int]:
    """``"1,2,5-7"`` -> ``[1, 2, 5, 6, 7]``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_setting(text: str) -> tuple[str, str, object]:
    """``SECTION.FIELD=VALUE`` with a JSON value (bare strings allowed)."""
    key, sep, raw = text.partition("=")
    section, dot, name = key.partition(".")
    if not sep or not dot or not section or not name:
        raise argparse.ArgumentTypeError(f"expected SECTION.FIELD=VALUE, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return section, name, value


def build_plan(args) -> ExperimentPlan:
    base: dict = {}
    if args.plan:
        base = json.loads(Path(args.plan).read_text(encoding="utf-8"))
        unknown = set(base) - set(PLAN_FIELDS)
        if unknown:
            raise SystemExit(f"unknown plan fields: {sorted(unknown)}")
    cli = {
        "algorithms": args.algo, "fids": args.fid, "dims": args.dim, "instances": args.instance,
        "repetitions": args.reps, "budget_factor": args.budget_factor, "budget_offset": args.budget_offset,
        "base_seed": args.seed, "output_root": args.out, "jobs": args.jobs,
    }
    base.update({k: v for k, v in cli.items() if v is not None})
    for key in ("algorithms", "fids", "dims"):
        if key not in base:
            raise SystemExit(f"missing {key}: pass it on the command line or in --plan")
    overrides = {a: {s: dict(f) for s, f in sec.items()} for a, sec in base.get("overrides", {}).items()}
    for section, name, value in args.set or []:
        for algo in base["algorithms"]:
            if section in get_solver(algo).default_config(1):
                overrides.setdefault(algo, {}).setdefault(section, {})[name] = value
    base["overrides"] = overrides
    return ExperimentPlan(**base)


def cmd_run(args) -> int:
    plan = build_plan(args)
    try:
        summary = run_experiment(plan)
    except SetupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{summary['completed']}/{summary['total']} runs completed, {summary['crashed']} crashed; "
          f"manifest {summary['manifest']}")
    return 0 if summary["crashed"] == 0 else 1


def cmd_analyze(args) -> int:
    runs = analysis.load_runs(args.inp)
    if args.dims:
        runs = [r for r in runs if r.dim in args.dims]
    what = {"convergence", "cpu", "wilcoxon", "violin"} if args.what == "all" else {args.what}
    curves = analysis.aggregate_convergence(runs) if "convergence" in what else []
    summaries = []
    if "cpu" in what:
        for dim in sorted({r.dim for r in runs}):
            summaries.extend(analysis.cpu_summary(runs, dim, seed=args.seed))
    tests = []
    if "wilcoxon" in what:
        for pair in args.pair or []:
            a, _, b = pair.partition(":")
            for cp in args.checkpoint or [None]:
                dims = sorted({r.dim for r in runs})
                for dim in dims:
                    sub = [r for r in runs if r.dim == dim]
                    checkpoint = cp if cp is not None else max((len(r.gaps) for r in sub), default=1)
                    tests.extend(analysis.compare_algorithms(sub, a, b, checkpoint, args.alpha))
    violins = analysis.violin_data(runs) if "violin" in what else []
    try:
        index = analysis.export_report(args.out, curves, summaries, tests, violins)
    except SetupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    n_files = sum(len(v) for v in index.values())
    print(f"{len(runs)} logs read, {n_files} tables written to {args.out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdbo", description="High-dimensional BO benchmark runner and analysis.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment matrix")
    r.add_argument("--plan", help="JSON plan file; command-line flags take precedence")
    r.add_argument("--algo", type=lambda s: s.split(","), help=f"comma list from {{{'|'.join(solver_names())}}}")
    r.add_argument("--fid", type=int_list, help="function ids, e.g. 1,5,15-24")
    r.add_argument("--dim", type=int_list)
    r.add_argument("--instance", type=int_list, help="default 0,1,2")
    r.add_argument("--reps", type=int, help="repetitions per instance (default 10)")
    r.add_argument("--budget-factor", type=int)
    r.add_argument("--budget-offset", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int, help="parallel runs (0 = all cores)")
    r.add_argument("--set", type=parse_setting, action="append", metavar="SECTION.FIELD=VALUE",
                   help="solver config override, e.g. gp.fit_restarts=3")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="aggregate logs into plot-ready tables")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--what", choices=["convergence", "cpu", "wilcoxon", "violin", "all"], default="all")
    a.add_argument("--dims", type=int_list)
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--pair", action="append", metavar="A:B", help="algorithm pair for Wilcoxon tests")
    a.add_argument("--checkpoint", type=int, action="append", help="evaluation index to compare at (default: final)")
    a.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run" and args.jobs == 0:
        args.jobs = None
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
