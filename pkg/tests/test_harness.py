import json

import numpy as np
import pytest

from hdbo import harness
from hdbo.errors import SetupError
from hdbo.harness import EvalLogRecord, ExperimentPlan, load_plan, log_body, read_log, read_manifest, run_experiment, run_seed
from hdbo.registry import SolverSpec, get_solver


def plan(tmp_path, **kw):
    base = dict(algorithms=["cmaes"], fids=[1], dims=[2], instances=[0], repetitions=2, output_root=str(tmp_path), jobs=1)
    base.update(kw)
    return ExperimentPlan(**base)


def test_counts_and_names(tmp_path):
    summary = run_experiment(plan(tmp_path, dims=[20], instances=[0, 1, 2], repetitions=10))
    files = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert len(files) == 30 and summary["completed"] == 30
    assert "cmaes_f1_d20_i2_r9.csv" in files
    for f in files:
        recs = read_log(tmp_path / f)
        assert [r.eval_index for r in recs] == list(range(1, 251))
        gaps = np.array([r.best_so_far_gap for r in recs])
        assert np.all(np.diff(gaps) <= 0)


def test_log_format(tmp_path):
    run_experiment(plan(tmp_path, algorithms=["turbo1"], repetitions=1))
    lines = (tmp_path / "turbo1_f1_d2_i0_r0.csv").read_text().splitlines()
    assert lines[0] == "evaluation,raw_y,best_so_far_gap,model_fit_cpu_s,acq_opt_cpu_s,extra_json"
    assert len(lines) == 71
    first = lines[1].split(",", 5)
    assert first[3] == first[4] == "0"
    assert json.loads(first[5])["region"] == 0
    rec = EvalLogRecord.from_row(lines[30])
    assert rec.to_row() == lines[30]
    assert len(first[1].replace("-", "").replace(".", "").split("e")[0]) >= 16  # 17 significant digits


def test_rerun_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(plan(a, algorithms=["cmaes", "bo"], repetitions=1))
    run_experiment(plan(b, algorithms=["cmaes", "bo"], repetitions=1))
    for f in a.glob("*.csv"):
        assert log_body(f, mask_timing=True) == log_body(b / f.name, mask_timing=True)
    assert log_body(a / "cmaes_f1_d2_i0_r0.csv") == log_body(b / "cmaes_f1_d2_i0_r0.csv")


def test_parallel_matches_serial(tmp_path):
    run_experiment(plan(tmp_path / "s", repetitions=3))
    run_experiment(plan(tmp_path / "p", repetitions=3, jobs=2))
    for f in (tmp_path / "s").glob("*.csv"):
        assert f.read_text() == (tmp_path / "p" / f.name).read_text()
    assert [e["artifact"] for e in read_manifest(tmp_path / "s")] == [e["artifact"] for e in read_manifest(tmp_path / "p")]


def test_manifest(tmp_path):
    run_experiment(plan(tmp_path, algorithms=["bo"], repetitions=1))
    (entry,) = read_manifest(tmp_path)
    assert entry["status"] == "completed"
    assert entry["seed"] == run_seed(0, "bo", 1, 2, 0, 0)
    assert entry["artifact"] == "bo_f1_d2_i0_r0.csv"
    assert entry["config"]["gp"]["kernel"] == "matern52-ard"
    recs = read_log(tmp_path / entry["artifact"])
    assert sum(r.model_fit_cpu_s + r.acq_opt_cpu_s for r in recs) <= entry["total_cpu_s"]
    assert "started" in entry and "finished" in entry


def test_seeds_differ_per_coordinate():
    seeds = {run_seed(0, a, f, 2, i, r) for a in ("bo", "cmaes") for f in (1, 2) for i in range(3) for r in range(3)}
    assert len(seeds) == 36


def test_crash_recorded_with_partial_log(tmp_path, monkeypatch):
    real = get_solver("cmaes")

    def runner(rc, cfg, obs):
        from hdbo.runs import Evaluator

        ev = Evaluator(rc, obs)
        for _ in range(5):
            ev(np.zeros(rc.problem.dim))
        raise RuntimeError("boom")

    fake = SolverSpec("cmaes", real.defaults, runner)
    monkeypatch.setattr(harness, "get_solver", lambda name: fake)
    summary = run_experiment(plan(tmp_path, repetitions=1))
    assert summary["crashed"] == 1
    (entry,) = read_manifest(tmp_path)
    assert entry["status"] == "crashed" and "boom" in entry["error"]
    assert len(read_log(tmp_path / entry["artifact"])) == 5


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(SetupError):
        run_experiment(plan(blocker / "sub"))
    assert not list(tmp_path.glob("*.csv"))


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(["bo"], [25], [2])
    with pytest.raises(ValueError):
        ExperimentPlan(["bo"], [1], [2], repetitions=0)
    with pytest.raises(LookupError):
        ExperimentPlan(["ebo"], [1], [2])
    p = ExperimentPlan(["bo"], [1], [60])
    assert p.budget(60) == 650 and p.instances == (0, 1, 2) and p.repetitions == 10


def test_plan_file(tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps({"algorithms": ["bo"], "fids": [1, 2], "dims": [2], "repetitions": 3}))
    p = load_plan(path, repetitions=1, base_seed=None)
    assert p.repetitions == 1 and list(p.fids) == [1, 2]
    path.write_text(json.dumps({"algorithms": ["bo"], "fids": [1], "dims": [2], "colour": 1}))
    with pytest.raises(ValueError):
        load_plan(path)
