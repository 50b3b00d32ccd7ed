import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdbo.runs import RunConfig
from hdbo.surrogate import GpConfig, build_model
from hdbo.testbed import make_problem
from hdbo.turbo import (
    TrustRegionState,
    TurboConfig,
    fresh_state,
    generate_candidates,
    run_turbo,
    thompson_select,
    update_state,
)

# D=10, batch 5: failtol = ceil(max(4/5, 10/5)) = 2. Rows: improved, length, successes, failures, restart.
SCRIPT_D10 = [
    (1, 0.8, 1, 0, 0), (1, 0.8, 2, 0, 0), (1, 1.6, 0, 0, 0), (1, 1.6, 1, 0, 0), (1, 1.6, 2, 0, 0),
    (1, 1.6, 0, 0, 0), (0, 1.6, 0, 1, 0), (0, 0.8, 0, 0, 0), (1, 0.8, 1, 0, 0), (0, 0.8, 0, 1, 0),
    (0, 0.4, 0, 0, 0), (0, 0.4, 0, 1, 0), (0, 0.2, 0, 0, 0), (1, 0.2, 1, 0, 0), (1, 0.2, 2, 0, 0),
    (0, 0.2, 0, 1, 0), (0, 0.1, 0, 0, 0), (0, 0.1, 0, 1, 0), (0, 0.05, 0, 0, 0), (0, 0.05, 0, 1, 0),
    (0, 0.025, 0, 0, 0), (0, 0.025, 0, 1, 0), (0, 0.0125, 0, 0, 0), (1, 0.0125, 1, 0, 0), (1, 0.0125, 2, 0, 0),
    (1, 0.025, 0, 0, 0), (0, 0.025, 0, 1, 0), (0, 0.0125, 0, 0, 0), (0, 0.0125, 0, 1, 0), (0, 0.00625, 0, 0, 1),
]


def test_failtol_rules():
    assert TurboConfig.turbo1(40).failtol == 8
    assert TurboConfig.turbo1(10).failtol == 2
    assert TurboConfig.turbo1(2).failtol == 1
    assert TurboConfig.turbom(10).failtol == 10
    assert TurboConfig.turbom(3).failtol == 5


def test_region_counts_and_candidates():
    assert TurboConfig.turbom(60).tr_count == 12
    assert TurboConfig.turbom(40).tr_count == 8
    assert TurboConfig.turbom(4).tr_count == 1
    assert TurboConfig.turbo1(10).n_cand == 1000
    assert TurboConfig.turbo1(60).n_cand == 5000


def test_defaults():
    c = TurboConfig.turbo1(20)
    assert (c.batch_size, c.succtol, c.length_init, c.length_min, c.length_max) == (5, 3, 0.8, 0.5**7, 1.6)
    assert (c.n_training_steps, c.max_cholesky_size) == (50, 2000)


def test_config_validation():
    with pytest.raises(ValueError):
        TurboConfig(length_init=2.0)
    with pytest.raises(ValueError):
        TurboConfig(failtol=0)


def test_scripted_transitions():
    cfg = TurboConfig.turbo1(10)
    st_ = fresh_state(cfg)
    for step, (imp, length, s, f, restart) in enumerate(SCRIPT_D10, 1):
        st_ = update_state(st_, bool(imp), cfg)
        assert (st_.length, st_.success_count, st_.failure_count, st_.restart_pending) == (length, s, f, bool(restart)), step


def test_three_successes_double():
    cfg = TurboConfig()
    st_ = fresh_state(cfg)
    for _ in range(3):
        st_ = update_state(st_, True, cfg)
    assert st_.length == 1.6


def test_halving_below_minimum_flags_restart():
    cfg = TurboConfig(failtol=1)
    st_ = TrustRegionState(length=cfg.length_min * 1.01)
    st_ = update_state(st_, False, cfg)
    assert st_.restart_pending


@settings(max_examples=100, deadline=None)
@given(seq=st.lists(st.booleans(), min_size=1, max_size=80), dim=st.integers(2, 60))
def test_state_invariants(seq, dim):
    cfg = TurboConfig.turbo1(dim)
    st_ = fresh_state(cfg)
    for imp in seq:
        st_ = update_state(st_, imp, cfg)
        assert st_.success_count == 0 or st_.failure_count == 0
        assert cfg.length_min * 0.5 <= st_.length <= cfg.length_max
        assert st_.restart_pending == (st_.length < cfg.length_min)
        if st_.restart_pending:
            break


def iso_model(dim, n=6, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, dim))
    return build_model(X, np.sum(X**2, 1), GpConfig(), np.full(dim, 0.3), 1.0, bounds=(0, 1))


def test_candidates_isotropic_box():
    dim = 6
    st_ = fresh_state(TurboConfig())
    st_.add(np.full((1, dim), 0.5), np.array([1.0]))
    cfg = TurboConfig.turbo1(dim)
    C = generate_candidates(st_, iso_model(dim), cfg, seed=1)
    assert C.shape == (cfg.n_cand, dim)
    dev = np.abs(C - 0.5)
    assert dev.max() <= 0.4 + 1e-12
    assert dev.max() > 0.35  # box is actually filled to its half-width
    assert np.all((dev > 0).sum(1) >= 1)


def test_candidates_mask_and_clipping():
    dim = 40
    st_ = fresh_state(TurboConfig())
    st_.add(np.full((1, dim), 0.95), np.array([0.0]))
    C = generate_candidates(st_, iso_model(dim), TurboConfig.turbo1(dim), seed=2)
    assert np.all((C >= 0) & (C <= 1))
    changed = (C != 0.95).mean()
    assert 0.4 < changed < 0.6  # perturbation probability 20/40
    assert np.all((C != 0.95).sum(1) >= 1)


def test_candidates_ard_scaling():
    st_ = fresh_state(TurboConfig())
    st_.add(np.full((1, 2), 0.5), np.array([0.0]))
    m = build_model(np.random.default_rng(0).uniform(size=(5, 2)), np.arange(5.0), GpConfig(), [0.1, 0.4], 1.0)
    C = generate_candidates(st_, m, TurboConfig.turbo1(2), seed=0)
    half = 0.4 * np.array([0.1, 0.4]) / np.sqrt(0.1 * 0.4)
    np.testing.assert_allclose(np.abs(C - 0.5).max(0), np.minimum(half, 0.5), rtol=0.05)  # clipped to the cube


def test_thompson_prefers_clear_minimum():
    X = np.linspace(0, 1, 6)[:, None]
    y = np.array([5.0, 5.0, -20.0, 5.0, 5.0, 5.0])
    m = build_model(X, y, GpConfig(noise_variance=0.0), [0.02], 1.0, bounds=(0, 1))
    st_ = fresh_state(TurboConfig())
    wins = 0
    for s in range(100):
        picks = thompson_select([(st_, m, X.copy())], 1, seed=s)
        wins += np.allclose(picks[0][1], X[2])
    assert wins >= 95


def test_thompson_bookkeeping():
    dim = 3
    pools = []
    for r in range(3):
        cand = np.random.default_rng(r).uniform(size=(20, dim)) * 0.3 + 0.3 * r
        pools.append((fresh_state(TurboConfig()), iso_model(dim, seed=r), cand))
    picks = thompson_select(pools, 5, seed=0)
    assert len(picks) == 5
    for r, x in picks:
        assert any(np.array_equal(x, c) for c in pools[r][2])
    assert len({tuple(x) for _, x in picks}) == 5
    short = thompson_select([None, (pools[0][0], pools[0][1], pools[0][2][:2])], 5, seed=0)
    assert len(short) == 2 and all(r == 1 for r, _ in short)


@pytest.mark.parametrize("multi", [False, True])
def test_run_exact_budget(multi):
    dim = 10 if multi else 3
    p = make_problem(1, dim, 0)
    tc = TurboConfig.turbom(dim) if multi else TurboConfig.turbo1(dim)
    budget = 43 if multi else 37
    events = []
    archive = run_turbo(RunConfig(p, budget=budget, seed=1), tc, observer=events.append)
    assert len(archive) == budget == len(events)
    assert [e.index for e in events] == list(range(1, budget + 1))
    assert np.all(np.diff(archive.best_so_far()) <= 0)
    assert np.all(np.abs(archive.X) <= 5)
    regions = {e.extra["region"] for e in events}
    assert regions <= set(range(tc.tr_count))
    # batch timings sit on the first evaluation of each batch only
    timed = [e for e in events if e.model_fit_cpu_s > 0]
    assert len(timed) <= (budget + tc.batch_size - 1) // tc.batch_size


def test_run_restarts_reset_region():
    p = make_problem(21, 2, 0)
    tc = TurboConfig(length_init=0.8, length_min=0.39, failtol=1, batch_size=2, n_cand=100)
    events = []
    archive = run_turbo(RunConfig(p, budget=60, seed=0), tc, observer=events.append)
    assert archive.meta["restarts"] >= 1
    after = [e for e in events if e.extra.get("restart", 0) >= 1]
    assert after, "a restart DoE should be logged"
    first_batch = next(e for e in events if "length" in e.extra and events.index(e) > events.index(after[0]))
    assert first_batch.extra["length"] == 0.8


def test_run_deterministic():
    p = make_problem(8, 3, 1)
    a = run_turbo(RunConfig(p, budget=30, seed=4))
    b = run_turbo(RunConfig(p, budget=30, seed=4))
    np.testing.assert_array_equal(a.X, b.X)
