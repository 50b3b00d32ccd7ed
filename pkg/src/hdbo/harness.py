"""Experiment matrices: run (algorithm x fid x dim x instance x repetition), write logs and a manifest.

Log files are CSV, one per run, named ``ALGO_fFID_dDIM_iINST_rREP.csv``.
The manifest ``manifest.jsonl`` in the output root has one JSON object per
run (coordinates, seed, status, CPU total, artifact name, timestamps).
Timestamps live only in the manifest, so log bodies depend on the seed alone
apart from the two CPU-time columns.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import SetupError
from .registry import describe_config, get_solver, resolve_config
from .runs import Evaluation, RunConfig
from .testbed import make_problem
from .timing import Phase, time_phase  # noqa: F401  (re-exported)

__all__ = ["EvalLogRecord", "ExperimentPlan", "Phase", "RunSpec", "execute_run", "load_plan", "log_body",
           "read_log", "read_manifest", "run_experiment", "run_seed", "time_phase"]

log = logging.getLogger(__name__)

LOG_HEADER = ("evaluation", "raw_y", "best_so_far_gap", "model_fit_cpu_s", "acq_opt_cpu_s", "extra_json")
MANIFEST = "manifest.jsonl"
TIMING_COLUMNS = (3, 4)


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


@dataclass(frozen=True)
class EvalLogRecord:
    eval_index: int
    raw_y: float
    best_so_far_gap: float
    model_fit_cpu_s: float = 0.0
    acq_opt_cpu_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_row(self) -> str:
        extra = json.dumps(self.extra, sort_keys=True, separators=(",", ":"), default=_jsonable)
        cells = [str(self.eval_index), fmt_float(self.raw_y), fmt_float(self.best_so_far_gap),
                 fmt_float(self.model_fit_cpu_s), fmt_float(self.acq_opt_cpu_s)]
        # extra_json is the last column, so it may contain commas unquoted
        return ",".join(cells + [extra])

    @classmethod
    def from_row(cls, line: str) -> "EvalLogRecord":
        parts = line.rstrip("\n").split(",", 5)
        if len(parts) != 6:
            raise ValueError(f"malformed log row: {line!r}")
        return cls(int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]), float(parts[4]),
                   json.loads(parts[5]) if parts[5] else {})


def log_filename(algorithm: str, fid: int, dim: int, instance: int, rep: int) -> str:
    return f"{algorithm}_f{fid}_d{dim}_i{instance}_r{rep}.csv"


def run_seed(base_seed: int, algorithm: str, fid: int, dim: int, instance: int, rep: int) -> int:
    key = f"{base_seed}|{algorithm}|{fid}|{dim}|{instance}|{rep}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little") % (2**31 - 1)


@dataclass
class ExperimentPlan:
    algorithms: Sequence[str]
    fids: Sequence[int]
    dims: Sequence[int]
    instances: Sequence[int] = (0, 1, 2)
    repetitions: int = 10
    budget_factor: int = 10
    budget_offset: int = 50
    base_seed: int = 0
    output_root: str = "runs"
    overrides: dict = field(default_factory=dict)  # solver name -> section overrides
    jobs: Optional[int] = None  # None: one per CPU core

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        bad = [f for f in self.fids if not 1 <= int(f) <= 24]
        if bad:
            raise ValueError(f"function ids must be in 1..24, got {bad}")
        for a in self.algorithms:
            get_solver(a)
        if any(d < 1 for d in self.dims):
            raise ValueError("dimensions must be >= 1")

    def budget(self, dim: int) -> int:
        return self.budget_factor * dim + self.budget_offset

    def runs(self) -> list["RunSpec"]:
        return [
            RunSpec(a, int(f), int(d), int(i), r, self.budget(int(d)),
                    run_seed(self.base_seed, a, int(f), int(d), int(i), r), self.overrides.get(a, {}))
            for a in self.algorithms for f in self.fids for d in self.dims
            for i in self.instances for r in range(self.repetitions)
        ]

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}


PLAN_FIELDS = tuple(f.name for f in dataclasses.fields(ExperimentPlan))


def load_plan(path, **cli_overrides) -> ExperimentPlan:
    """Plan file (JSON with ExperimentPlan fields); non-None keyword arguments take precedence."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - set(PLAN_FIELDS)
    if unknown:
        raise ValueError(f"unknown plan fields: {sorted(unknown)}")
    data.update({k: v for k, v in cli_overrides.items() if v is not None})
    return ExperimentPlan(**data)


@dataclass(frozen=True)
class RunSpec:
    algorithm: str
    fid: int
    dim: int
    instance: int
    rep: int
    budget: int
    seed: int
    overrides: dict

    @property
    def filename(self) -> str:
        return log_filename(self.algorithm, self.fid, self.dim, self.instance, self.rep)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def execute_run(spec: RunSpec, output_root) -> dict:
    """Run one solver and stream its log; never raises for solver failures."""
    path = Path(output_root) / spec.filename
    problem = make_problem(spec.fid, spec.dim, spec.instance)
    entry = {
        "algorithm": spec.algorithm, "fid": spec.fid, "dim": spec.dim, "instance": spec.instance,
        "repetition": spec.rep, "seed": spec.seed, "budget": spec.budget, "artifact": spec.filename,
        "started": _now(),
    }
    best = math.inf
    cpu0 = time.process_time()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(LOG_HEADER) + "\n")

        def observer(ev: Evaluation) -> None:
            nonlocal best
            best = min(best, ev.y)
            rec = EvalLogRecord(ev.index, ev.y, best - problem.f_opt, ev.model_fit_cpu_s, ev.acq_opt_cpu_s, ev.extra)
            fh.write(rec.to_row() + "\n")

        try:
            config = resolve_config(spec.algorithm, spec.dim, spec.overrides)
            entry["config"] = describe_config(config)
            archive = get_solver(spec.algorithm).runner(RunConfig(problem, spec.budget, seed=spec.seed), config, observer)
            entry.update(status="completed", evaluations=len(archive), meta=archive.meta)
        except Exception as exc:  # recorded in the manifest, partial log kept
            log.warning("run %s crashed: %s", spec.filename, exc)
            entry.update(status="crashed", error=f"{type(exc).__name__}: {exc}",
                         traceback=traceback.format_exc(limit=5))
    entry["total_cpu_s"] = time.process_time() - cpu0
    entry["finished"] = _now()
    return entry


def _check_writable(root: Path) -> None:
    try:
        root.mkdir(parents=True, exist_ok=True)
        probe = root / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise SetupError(f"output directory {root} is not writable: {exc}") from exc


def _manifest_line(entry: dict) -> str:
    return json.dumps(entry, sort_keys=True, default=_jsonable) + "\n"


def run_experiment(plan: ExperimentPlan) -> dict:
    """Execute every run of ``plan``; returns counts and the manifest entries in plan order."""
    root = Path(plan.output_root)
    _check_writable(root)
    specs = plan.runs()
    jobs = plan.jobs or os.cpu_count() or 1
    manifest = root / MANIFEST
    entries: dict[str, dict] = {}
    with open(manifest, "w", encoding="utf-8") as mf:
        def record(entry):
            entries[entry["artifact"]] = entry
            mf.write(_manifest_line(entry))
            mf.flush()

        if jobs <= 1 or len(specs) <= 1:
            for s in specs:
                record(execute_run(s, root))
        else:
            with ProcessPoolExecutor(max_workers=min(jobs, len(specs))) as pool:
                for entry in pool.map(execute_run, specs, [root] * len(specs)):
                    record(entry)
    ordered = [entries[s.filename] for s in specs]
    # rewrite in plan order so the manifest is stable regardless of completion order
    manifest.write_text("".join(_manifest_line(e) for e in ordered), encoding="utf-8")
    counts = {"total": len(ordered), "completed": sum(e["status"] == "completed" for e in ordered)}
    counts["crashed"] = counts["total"] - counts["completed"]
    return {"output_root": str(root), "manifest": str(manifest), **counts, "runs": ordered}


def read_manifest(root) -> list[dict]:
    path = Path(root) / MANIFEST
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def read_log(path) -> list[EvalLogRecord]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != ",".join(LOG_HEADER):
            raise ValueError(f"{path}: unexpected header {header!r}")
        return [EvalLogRecord.from_row(line) for line in fh if line.strip()]


def log_body(path, mask_timing: bool = False) -> str:
    """Log text after the header; optionally with the CPU-time columns blanked."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    if mask_timing:
        out = []
        for line in lines:
            parts = line.split(",", 5)
            for c in TIMING_COLUMNS:
                parts[c] = "*"
            out.append(",".join(parts))
        lines = out
    return "\n".join(lines)
