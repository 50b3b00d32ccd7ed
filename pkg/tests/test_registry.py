import numpy as np
import pytest

from hdbo.registry import describe_config, dispatch, list_solvers, resolve_config, solver_names
from hdbo.runs import RunConfig
from hdbo.testbed import make_problem


def test_registered_names():
    names = solver_names()
    assert names == ["bo", "pca-bo", "kpca-bo", "turbo1", "turbom", "cmaes"]
    assert len(set(names)) == len(names)
    assert "saasbo" not in names and "ebo" not in names
    assert [s.name for s in list_solvers()] == names


def test_defaults_follow_dimension():
    assert resolve_config("turbom", 40)["turbo"].tr_count == 8
    assert resolve_config("turbo1", 40)["turbo"].failtol == 8
    assert resolve_config("cmaes", 10)["cmaes"].resolved_population(10) == 10
    assert resolve_config("kpca-bo", 5)["embedding"].kind == "kpca"


def test_overrides():
    cfg = resolve_config("bo", 3, {"gp": {"fit_restarts": 2}, "acq": {"bounds": [-5, 5]}})
    assert cfg["gp"].fit_restarts == 2 and cfg["acq"].bounds == (-5, 5)
    with pytest.raises(KeyError):
        resolve_config("bo", 3, {"turbo": {"batch_size": 2}})
    with pytest.raises(TypeError):
        resolve_config("bo", 3, {"gp": {"no_such_field": 1}})
    assert describe_config(cfg)["gp"]["fit_restarts"] == 2


def test_unknown_name():
    with pytest.raises(LookupError, match="valid names: bo, pca-bo"):
        dispatch("saasbo", RunConfig(make_problem(1, 2, 0)))


@pytest.mark.parametrize("name", solver_names())
def test_every_solver_spends_budget(name):
    events = []
    archive = dispatch(name, RunConfig(make_problem(1, 2, 0), budget=24, seed=0), events.append)
    assert len(archive) == 24
    assert [e.index for e in events] == list(range(1, 25))
    assert np.all(np.diff(archive.best_so_far()) <= 0)
