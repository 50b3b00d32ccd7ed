"""Post-processing of harness output: convergence curves, CPU tables, Wilcoxon tests, violin data.

Everything here reads logs and the manifest and writes plot-ready CSV plus
a JSON index; nothing is rendered.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from .errors import AggregationError, SetupError, UndefinedTestError
from .harness import fmt_float, read_log, read_manifest

_NAME = re.compile(r"^(?P<algorithm>.+)_f(?P<fid>\d+)_d(?P<dim>\d+)_i(?P<instance>\d+)_r(?P<rep>\d+)\.csv$")
EXACT_MAX_M = 15


@dataclass
class RunLog:
    algorithm: str
    fid: int
    dim: int
    instance: int
    rep: int
    path: str
    status: str = "completed"
    budget: Optional[int] = None
    total_cpu_s: Optional[float] = None
    gaps: np.ndarray = field(default_factory=lambda: np.empty(0))
    model_fit: np.ndarray = field(default_factory=lambda: np.empty(0))
    acq_opt: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def complete(self) -> bool:
        return self.status == "completed" and (self.budget is None or len(self.gaps) == self.budget)

    @property
    def final_gap(self) -> float:
        return float(self.gaps[-1])


def load_runs(root) -> list[RunLog]:
    """Every log under ``root``, annotated with manifest status and CPU totals when available."""
    root = Path(root)
    manifest = {e["artifact"]: e for e in read_manifest(root)}
    runs = []
    for path in sorted(root.glob("*.csv")):
        m = _NAME.match(path.name)
        if not m:
            continue
        recs = read_log(path)
        entry = manifest.get(path.name, {})
        runs.append(RunLog(
            m["algorithm"], int(m["fid"]), int(m["dim"]), int(m["instance"]), int(m["rep"]), str(path),
            status=entry.get("status", "completed"), budget=entry.get("budget"),
            total_cpu_s=entry.get("total_cpu_s"),
            gaps=np.array([r.best_so_far_gap for r in recs]),
            model_fit=np.array([r.model_fit_cpu_s for r in recs]),
            acq_opt=np.array([r.acq_opt_cpu_s for r in recs]),
        ))
    return runs


# --------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceCurve:
    algorithm: str
    fid: int
    dim: int
    mean: np.ndarray
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    run_count: int
    excluded: int = 0

    def __len__(self) -> int:
        return len(self.median)


def aggregate_convergence(runs: Iterable[RunLog], keys: Sequence[str] = ("algorithm", "fid", "dim")) -> list[ConvergenceCurve]:
    """Per-evaluation gap statistics over the completed runs of each group."""
    groups: dict[tuple, list[RunLog]] = defaultdict(list)
    for r in runs:
        groups[tuple(getattr(r, k) for k in keys)].append(r)
    curves = []
    for key in sorted(groups):
        members = groups[key]
        done = [r for r in members if r.complete]
        lengths = {len(r.gaps) for r in done}
        if len(lengths) > 1:
            names = ", ".join(f"{Path(r.path).name} ({len(r.gaps)})" for r in done)
            raise AggregationError(f"mixed budgets in group {key}: {names}")
        first = members[0]
        if not done:
            empty = np.empty(0)
            curves.append(ConvergenceCurve(first.algorithm, first.fid, first.dim, empty, empty, empty, empty, 0, len(members)))
            continue
        G = np.vstack([r.gaps for r in done])
        q25, med, q75 = np.percentile(G, [25, 50, 75], axis=0)
        curves.append(ConvergenceCurve(first.algorithm, first.fid, first.dim, G.mean(axis=0), med, q25, q75,
                                       len(done), len(members) - len(done)))
    return curves


# --------------------------------------------------------------------------
# CPU time


class Scope(enum.Enum):
    TotalRun = "total_run"
    ModelFit = "model_fit"
    AcqOpt = "acq_opt"


@dataclass(frozen=True)
class CpuSummary:
    algorithm: str
    dim: int
    scope: Scope
    mean_seconds: float
    bootstrap_ci_low: float
    bootstrap_ci_high: float
    run_count: int


def _phase_mean(t: np.ndarray) -> float:
    nz = t[t > 0]
    return float(nz.mean()) if len(nz) else 0.0


def run_cpu_values(run: RunLog) -> dict[Scope, float]:
    out = {Scope.ModelFit: _phase_mean(run.model_fit), Scope.AcqOpt: _phase_mean(run.acq_opt)}
    if run.total_cpu_s is not None:
        out[Scope.TotalRun] = float(run.total_cpu_s)
    return out


def _two_level_mean(values_by_fid: list[np.ndarray]) -> float:
    return float(np.mean([v.mean() for v in values_by_fid]))


def cpu_summary(runs: Iterable[RunLog], dim: int, n_boot: int = 1000, seed: int = 0,
                confidence: float = 0.95) -> list[CpuSummary]:
    """Per-run phase means, averaged per function and then across functions, with percentile bootstrap CIs.

    The bootstrap resamples runs within each function. An empty selection
    returns an empty list.
    """
    by_algo: dict[str, dict[int, list[RunLog]]] = defaultdict(lambda: defaultdict(list))
    for r in runs:
        if r.dim == dim and r.complete:
            by_algo[r.algorithm][r.fid].append(r)
    out = []
    alpha = 1.0 - confidence
    for algo in sorted(by_algo):
        fids = sorted(by_algo[algo])
        per_run = {fid: [run_cpu_values(r) for r in by_algo[algo][fid]] for fid in fids}
        for scope in Scope:
            if not all(scope in v for fid in fids for v in per_run[fid]):
                continue
            vals = [np.array([v[scope] for v in per_run[fid]]) for fid in fids]
            if scope is not Scope.TotalRun and not any(np.any(v > 0) for v in vals):
                continue  # solver has no surrogate phases
            point = _two_level_mean(vals)
            rng = np.random.default_rng(seed)
            boots = np.empty(n_boot)
            for b in range(n_boot):
                boots[b] = np.mean([v[rng.integers(0, len(v), len(v))].mean() for v in vals])
            lo, hi = np.percentile(boots, [100 * alpha / 2, 100 * (1 - alpha / 2)])
            out.append(CpuSummary(algo, dim, scope, point, float(min(lo, point)), float(max(hi, point)),
                                  sum(len(v) for v in vals)))
    return out


# --------------------------------------------------------------------------
# Wilcoxon signed-rank


class WilcoxonResult(NamedTuple):
    statistic: float
    p_value: float
    n_nonzero: int
    method: str


def _exact_p(doubled_ranks: np.ndarray, w_doubled: int) -> float:
    """P(min(W+, W-) <= W) under random signs, by counting subset sums of the (doubled, integer) ranks."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks.astype(int):
        counts[r:] = counts[r:] + counts[: total + 1 - r].copy()
    s = np.arange(total + 1)
    hit = np.minimum(s, total - s) <= w_doubled
    return float(min(1.0, counts[hit].sum() / 2.0 ** len(doubled_ranks)))


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided paired test; zero differences dropped, average ranks for ties.

    Exact p for up to 15 nonzero differences, otherwise the normal
    approximation with tie and continuity corrections.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise ValueError("a and b must be non-empty vectors of equal length")
    d = a - b
    d = d[d != 0]
    m = len(d)
    if m == 0:
        raise UndefinedTestError("all paired differences are zero")
    ranks = rankdata(np.abs(d), method="average")
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if m <= EXACT_MAX_M:
        return WilcoxonResult(w, _exact_p(np.rint(2 * ranks), int(round(2 * w))), m, "exact")
    mu = m * (m + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    z = (w - mu + 0.5) / math.sqrt(var)
    return WilcoxonResult(w, float(min(1.0, 2.0 * ndtr(min(z, 0.0)))), m, "normal")


@dataclass(frozen=True)
class PairedTest:
    algorithm_a: str
    algorithm_b: str
    fid: int
    dim: int
    checkpoint: int
    n_pairs: int
    median_a: float
    median_b: float
    statistic: float
    p_value: float
    method: str
    significant: bool


def gap_at(run: RunLog, checkpoint: int) -> float:
    """Best-so-far gap after ``checkpoint`` evaluations (clipped to the run length)."""
    return float(run.gaps[min(checkpoint, len(run.gaps)) - 1])


def compare_algorithms(runs: Iterable[RunLog], a: str, b: str, checkpoint: int, alpha: float = 0.05) -> list[PairedTest]:
    """Pair runs of ``a`` and ``b`` by (fid, dim, instance, repetition) and test the gaps at ``checkpoint``."""
    table: dict[tuple, dict[str, RunLog]] = defaultdict(dict)
    for r in runs:
        if r.algorithm in (a, b) and r.complete:
            table[(r.fid, r.dim, r.instance, r.rep)][r.algorithm] = r
    groups: dict[tuple, list[tuple[float, float]]] = defaultdict(list)
    for (fid, dim, _, _), pair in sorted(table.items()):
        if a in pair and b in pair:
            groups[(fid, dim)].append((gap_at(pair[a], checkpoint), gap_at(pair[b], checkpoint)))
    out = []
    for (fid, dim), pairs in sorted(groups.items()):
        xa, xb = np.array(pairs).T
        try:
            res = wilcoxon_signed_rank(xa, xb)
            stat, p, method = res.statistic, res.p_value, res.method
        except UndefinedTestError:
            stat, p, method = math.nan, math.nan, "undefined"
        out.append(PairedTest(a, b, fid, dim, checkpoint, len(pairs), float(np.median(xa)), float(np.median(xb)),
                              stat, p, method, bool(p < alpha) if not math.isnan(p) else False))
    return out


# --------------------------------------------------------------------------
# violin data and export


@dataclass(frozen=True)
class ViolinRow:
    algorithm: str
    fid: int
    dim: int
    instance: int
    rep: int
    final_gap: float


def violin_data(runs: Iterable[RunLog]) -> list[ViolinRow]:
    return [ViolinRow(r.algorithm, r.fid, r.dim, r.instance, r.rep, r.final_gap)
            for r in sorted(runs, key=lambda r: (r.algorithm, r.fid, r.dim, r.instance, r.rep)) if r.complete]


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])


def export_report(out_dir, curves: Sequence[ConvergenceCurve] = (), summaries: Sequence[CpuSummary] = (),
                  tests: Sequence[PairedTest] = (), violins: Sequence[ViolinRow] = ()) -> dict:
    """Write one CSV per figure analog plus ``index.json``; returns the index."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / ".write_probe").write_text("")
        (out / ".write_probe").unlink()
    except OSError as exc:
        raise SetupError(f"report directory {out} is not writable: {exc}") from exc

    index: dict[str, list] = {"convergence": [], "cpu": [], "wilcoxon": [], "violin": []}

    by_dim: dict[int, list[ConvergenceCurve]] = defaultdict(list)
    for c in curves:
        by_dim[c.dim].append(c)
    for dim, cs in sorted(by_dim.items()):
        name = f"convergence_d{dim}.csv"
        rows = ((c.algorithm, c.fid, c.dim, i + 1, c.mean[i], c.median[i], c.q25[i], c.q75[i], c.run_count)
                for c in cs for i in range(len(c)))
        _write_csv(out / name, ("algorithm", "fid", "dim", "evaluation", "mean", "median", "q25", "q75", "run_count"), rows)
        index["convergence"].append({"dim": dim, "file": name})

    cpu_by_dim: dict[int, list[CpuSummary]] = defaultdict(list)
    for s in summaries:
        cpu_by_dim[s.dim].append(s)
    for dim, ss in sorted(cpu_by_dim.items()):
        name = f"cpu_d{dim}.csv"
        _write_csv(out / name, ("algorithm", "dim", "scope", "mean_seconds", "ci_low", "ci_high", "run_count"),
                   ((s.algorithm, s.dim, s.scope.value, s.mean_seconds, s.bootstrap_ci_low, s.bootstrap_ci_high, s.run_count)
                    for s in ss))
        index["cpu"].append({"dim": dim, "file": name})

    if tests:
        name = "wilcoxon.csv"
        _write_csv(out / name, ("algorithm_a", "algorithm_b", "fid", "dim", "checkpoint", "n_pairs", "median_a",
                                "median_b", "statistic", "p_value", "method", "significant"),
                   ((t.algorithm_a, t.algorithm_b, t.fid, t.dim, t.checkpoint, t.n_pairs, t.median_a, t.median_b,
                     t.statistic, t.p_value, t.method, t.significant) for t in tests))
        index["wilcoxon"].append({"file": name})

    v_groups: dict[tuple, list[ViolinRow]] = defaultdict(list)
    for v in violins:
        v_groups[(v.fid, v.dim)].append(v)
    for (fid, dim), vs in sorted(v_groups.items()):
        name = f"violin_f{fid}_d{dim}.csv"
        _write_csv(out / name, ("algorithm", "fid", "dim", "instance", "repetition", "final_gap"),
                   ((v.algorithm, v.fid, v.dim, v.instance, v.rep, v.final_gap) for v in vs))
        index["violin"].append({"fid": fid, "dim": dim, "file": name})

    (out / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return index
