"""Run a small experiment matrix and turn the logs into tables.

This is the programmatic twin of::

    hdbo run --algo bo,turbo1,cmaes --fid 1,8 --dim 3 --reps 3 --out demo_runs
    hdbo analyze --in demo_runs --out demo_report --pair bo:cmaes
"""

# %%
import json
import tempfile
from pathlib import Path

from hdbo import analysis
from hdbo.harness import ExperimentPlan, read_manifest, run_experiment

root = Path(tempfile.mkdtemp(prefix="hdbo_demo_"))
plan = ExperimentPlan(["bo", "turbo1", "cmaes"], fids=[1, 8], dims=[3], instances=[0], repetitions=3,
                      output_root=str(root / "runs"), jobs=1)
summary = run_experiment(plan)
print(f"{summary['completed']} of {summary['total']} runs completed")

# %%
# One CSV per run, plus a JSONL manifest with seeds, status and CPU totals.
entry = read_manifest(root / "runs")[0]
print(json.dumps({k: entry[k] for k in ("artifact", "seed", "status", "total_cpu_s")}, indent=1))
print((root / "runs" / entry["artifact"]).read_text().splitlines()[:3])

# %%
runs = analysis.load_runs(root / "runs")
for curve in analysis.aggregate_convergence(runs):
    print(f"{curve.algorithm:7s} f{curve.fid}: median final gap {curve.median[-1]:.4g}")

# %%
for s in analysis.cpu_summary(runs, dim=3, n_boot=200):
    print(f"{s.algorithm:7s} {s.scope.value:9s} {s.mean_seconds * 1e3:8.2f} ms  "
          f"CI [{s.bootstrap_ci_low * 1e3:.2f}, {s.bootstrap_ci_high * 1e3:.2f}]")

# %%
for t in analysis.compare_algorithms(runs, "bo", "cmaes", checkpoint=30):
    print(f"f{t.fid} d{t.dim} @30: medians {t.median_a:.3g} vs {t.median_b:.3g}, p={t.p_value:.3g} ({t.method})")

index = analysis.export_report(root / "report", analysis.aggregate_convergence(runs),
                               analysis.cpu_summary(runs, dim=3, n_boot=200), [], analysis.violin_data(runs))
print("tables written:", sorted(item["file"] for items in index.values() for item in items))
