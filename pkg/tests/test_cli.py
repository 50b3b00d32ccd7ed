import json

import pytest

from hdbo.cli import int_list, main, parse_setting
from hdbo.harness import read_manifest


def test_int_list():
    assert int_list("1,3-5, 9") == [1, 3, 4, 5, 9]


def test_parse_setting():
    assert parse_setting("gp.fit_restarts=3") == ("gp", "fit_restarts", 3)
    assert parse_setting("gp.kernel=rbf-iso") == ("gp", "kernel", "rbf-iso")
    with pytest.raises(Exception):
        parse_setting("fit_restarts=3")


def test_run_and_analyze(tmp_path, capsys):
    out = tmp_path / "runs"
    rc = main(["run", "--algo", "cmaes,turbo1", "--fid", "1", "--dim", "2", "--instance", "0", "--reps", "2",
               "--seed", "4", "--out", str(out), "--jobs", "1", "--set", "turbo.batch_size=2"])
    assert rc == 0
    manifest = read_manifest(out)
    assert len(manifest) == 4
    turbo = [e for e in manifest if e["algorithm"] == "turbo1"]
    assert all(e["config"]["turbo"]["batch_size"] == 2 for e in turbo)
    rep = tmp_path / "rep"
    assert main(["analyze", "--in", str(out), "--out", str(rep), "--pair", "turbo1:cmaes", "--checkpoint", "30"]) == 0
    index = json.loads((rep / "index.json").read_text())
    assert index["wilcoxon"] and index["convergence"] and index["cpu"] and index["violin"]
    assert "4/4 runs completed" in capsys.readouterr().out


def test_plan_file_precedence(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"algorithms": ["cmaes"], "fids": [1], "dims": [2], "instances": [0],
                                "repetitions": 3, "output_root": str(tmp_path / "a")}))
    assert main(["run", "--plan", str(plan), "--reps", "1", "--jobs", "1"]) == 0
    assert len(read_manifest(tmp_path / "a")) == 1


def test_unwritable_output(tmp_path):
    (tmp_path / "f").write_text("")
    assert main(["run", "--algo", "cmaes", "--fid", "1", "--dim", "2", "--reps", "1", "--out", str(tmp_path / "f" / "x")]) == 2


def test_unknown_algorithm(tmp_path):
    with pytest.raises(LookupError):
        main(["run", "--algo", "ebo", "--fid", "1", "--dim", "2", "--out", str(tmp_path)])
