import numpy as np
import pytest

from hdbo.cmaes import CMAES, CmaesConfig, default_population_size, minimize, run_cmaes
from hdbo.runs import RunConfig
from hdbo.testbed import make_problem


def test_population_sizes():
    assert default_population_size(10) == 10
    assert default_population_size(2) == 6
    assert default_population_size(40) == 15
    with pytest.raises(ValueError):
        CmaesConfig(population_size=3).resolved_population(5)


def test_default_strategy_parameters():
    es = CMAES(np.zeros(10), 1.0, 10, np.random.default_rng(0))
    np.testing.assert_allclose(es.weights.sum(), 1.0)
    assert np.all(np.diff(es.weights) < 0)
    mueff = 1 / np.sum(es.weights**2)
    assert es.cs == pytest.approx((mueff + 2) / (10 + mueff + 5))
    assert es.c1 == pytest.approx(2 / ((10 + 1.3) ** 2 + mueff))


def test_unbounded_sphere():
    hits = 0
    for seed in range(10):
        x0 = np.random.default_rng(100 + seed).uniform(-5, 5, 5)
        _, f, _ = minimize(lambda x: float(x @ x), x0, 1.0, 3000, seed=seed)
        hits += f <= 1e-6
    assert hits >= 9


def test_covariance_stays_positive_definite():
    rng = np.random.default_rng(0)
    es = CMAES(rng.uniform(-1, 1, 6), 0.5, 10, rng)
    H = np.diag(10.0 ** np.arange(6))
    for _ in range(60):
        X = es.ask()
        es.tell(X, np.einsum("ij,jk,ik->i", X, H, X))
        np.testing.assert_allclose(es.C, es.C.T)
        assert np.linalg.eigvalsh(es.C).min() > 0


def test_run_budget_and_bounds():
    p = make_problem(2, 10, 0)
    events = []
    archive = run_cmaes(RunConfig(p, budget=95, seed=3), observer=events.append)
    assert len(archive) == 95 == len(events)
    assert archive.meta["population_size"] == 10
    assert archive.meta["sigma0"] == 1.0
    assert np.all(np.abs(archive.X) <= 5)
    assert all(e.model_fit_cpu_s == 0 == e.acq_opt_cpu_s for e in events)
    assert events[-1].extra["generation"] == 9  # final generation truncated to 5 of 10


def test_run_deterministic():
    p = make_problem(15, 4, 1)
    a = run_cmaes(RunConfig(p, budget=80, seed=11))
    b = run_cmaes(RunConfig(p, budget=80, seed=11))
    np.testing.assert_array_equal(a.X, b.X)


def test_budget_below_population():
    with pytest.raises(ValueError):
        run_cmaes(RunConfig(make_problem(1, 10, 0), budget=9, n0=1))
