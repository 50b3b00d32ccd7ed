"""Trust-region BO with one (TuRBO-1) or several (TuRBO-m) local GP models.

Trust regions live in the unit cube that the box [-5, 5]^D is mapped onto,
so ``length`` is a fraction of the box width. Each region keeps its own
archive and GP; batches are chosen by Thompson sampling across all regions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import surrogate
from .doe import latin_hypercube, low_discrepancy_sequence
from .runs import Archive, Evaluator, Observer, RunConfig
from .surrogate import GpConfig, GpModel
from .timing import Phase, time_phase

log = logging.getLogger(__name__)

LO, HI = -5.0, 5.0
UNIT = (0.0, 1.0)
# Hyperparameter boxes of the reference TuRBO GP. Long lengthscales are capped
# so the ARD-shaped trust region cannot collapse onto a few coordinates.
LENGTHSCALE_BOUNDS = (0.005, 2.0)
SIGNAL_VARIANCE_BOUNDS = (0.05, 20.0)


def default_gp_config(tconfig: "TurboConfig") -> GpConfig:
    return GpConfig(lengthscale_bounds=LENGTHSCALE_BOUNDS, signal_variance_bounds=SIGNAL_VARIANCE_BOUNDS,
                    fit_restarts=1, max_iter=tconfig.n_training_steps)


@dataclass(frozen=True)
class TurboConfig:
    tr_count: int = 1
    batch_size: int = 5
    n_training_steps: int = 50
    n_cand: int = 5000
    succtol: int = 3
    failtol: int = 4
    length_init: float = 0.8
    length_min: float = 0.5**7
    length_max: float = 1.6
    max_cholesky_size: int = 2000
    improvement_tol: float = 1e-3

    def __post_init__(self):
        if not 0 < self.length_min < self.length_init <= self.length_max:
            raise ValueError("need 0 < length_min < length_init <= length_max")
        if self.succtol < 1 or self.failtol < 1:
            raise ValueError("succtol and failtol must be >= 1")
        if self.tr_count < 1 or self.batch_size < 1:
            raise ValueError("tr_count and batch_size must be >= 1")

    @classmethod
    def turbo1(cls, dim: int, **kw) -> "TurboConfig":
        batch = kw.pop("batch_size", 5)
        failtol = math.ceil(max(4.0 / batch, dim / batch))
        return cls(tr_count=1, batch_size=batch, n_cand=min(100 * dim, 5000), failtol=failtol, **kw)

    @classmethod
    def turbom(cls, dim: int, **kw) -> "TurboConfig":
        batch = kw.pop("batch_size", 5)
        return cls(tr_count=max(1, dim // 5), batch_size=batch, n_cand=min(100 * dim, 5000),
                   failtol=max(5, dim), **kw)


@dataclass
class TrustRegionState:
    length: float
    success_count: int = 0
    failure_count: int = 0
    center: Optional[np.ndarray] = None  # unit-cube coordinates
    X: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))  # unit-cube coordinates
    y: np.ndarray = field(default_factory=lambda: np.empty(0))
    restart_pending: bool = False

    @property
    def best_y(self) -> float:
        return float(np.min(self.y)) if len(self.y) else np.inf

    def add(self, X_unit: np.ndarray, y: np.ndarray) -> None:
        X_unit = np.atleast_2d(X_unit)
        self.X = X_unit.copy() if self.X.size == 0 else np.vstack([self.X, X_unit])
        self.y = np.append(self.y, y)
        self.center = self.X[int(np.argmin(self.y))].copy()


def fresh_state(config: TurboConfig) -> TrustRegionState:
    return TrustRegionState(length=config.length_init)


def update_state(state: TrustRegionState, improved: bool, config: TurboConfig) -> TrustRegionState:
    """Success/failure bookkeeping: double after ``succtol`` successes, halve after ``failtol`` failures."""
    s, f, length = state.success_count, state.failure_count, state.length
    if improved:
        s, f = s + 1, 0
    else:
        s, f = 0, f + 1
    if s == config.succtol:
        length, s = min(2.0 * length, config.length_max), 0
    elif f == config.failtol:
        length, f = length / 2.0, 0
    return replace(state, length=length, success_count=s, failure_count=f,
                   restart_pending=state.restart_pending or length < config.length_min)


def trust_region_bounds(state: TrustRegionState, model: GpModel) -> tuple[np.ndarray, np.ndarray]:
    """Box around the center, side lengths scaled by normalized ARD lengthscales."""
    ls = np.asarray(model.lengthscales, dtype=float)
    w = ls / np.exp(np.mean(np.log(ls)))
    lo = np.clip(state.center - 0.5 * state.length * w, *UNIT)
    hi = np.clip(state.center + 0.5 * state.length * w, *UNIT)
    return lo, hi


def generate_candidates(state: TrustRegionState, model: GpModel, config: TurboConfig, seed: int = 0) -> np.ndarray:
    """``n_cand`` unit-cube candidates perturbing random coordinate subsets of the center."""
    rng = np.random.default_rng(seed)
    dim = len(state.center)
    lo, hi = trust_region_bounds(state, model)
    pert = lo + (hi - lo) * low_discrepancy_sequence(config.n_cand, dim, int(rng.integers(2**31 - 1)))
    prob = min(20.0 / dim, 1.0)
    mask = rng.random((config.n_cand, dim)) <= prob
    empty = np.flatnonzero(~mask.any(axis=1))
    mask[empty, rng.integers(0, dim, size=len(empty))] = True
    cand = np.tile(state.center, (config.n_cand, 1))
    cand[mask] = pert[mask]
    return cand


def thompson_select(regions, batch_size: int, seed: int = 0) -> list[tuple[int, np.ndarray]]:
    """Pick up to ``batch_size`` (region index, candidate) pairs by Thompson sampling.

    ``regions`` is a sequence of ``(state, model, candidates)``; inactive
    regions may be passed as ``None``. For every batch slot each region
    contributes one joint posterior draw over its candidates, and the
    globally smallest sampled value wins; chosen candidates leave the pool.
    """
    rng = np.random.default_rng(seed)
    draws = []
    for item in regions:
        if item is None:
            draws.append(None)
            continue
        _, model, cand = item
        draws.append(surrogate.sample_posterior(model, cand, batch_size, int(rng.integers(2**31 - 1))))
    used = [np.zeros(len(item[2]), dtype=bool) if item is not None else None for item in regions]
    picks = []
    for slot in range(batch_size):
        best = None
        for r, samples in enumerate(draws):
            if samples is None or used[r].all():
                continue
            vals = np.where(used[r], np.inf, samples[slot])
            j = int(np.argmin(vals))
            if best is None or vals[j] < best[0]:
                best = (vals[j], r, j)
        if best is None:
            break
        _, r, j = best
        used[r][j] = True
        picks.append((r, regions[r][2][j].copy()))
    return picks


def _to_unit(x):
    return (np.asarray(x, dtype=float) - LO) / (HI - LO)


def _from_unit(u):
    return LO + (HI - LO) * np.asarray(u, dtype=float)


def run_turbo(
    config: RunConfig,
    tconfig: Optional[TurboConfig] = None,
    gp_config: Optional[GpConfig] = None,
    observer: Optional[Observer] = None,
) -> Archive:
    dim = config.problem.dim
    tconfig = tconfig or TurboConfig.turbo1(dim)
    gp_config = gp_config or default_gp_config(tconfig)
    rng = np.random.default_rng(config.seed)
    evaluate = Evaluator(config, observer)
    seed = lambda: int(rng.integers(2**31 - 1))  # noqa: E731
    n_tr = tconfig.tr_count
    init_size = max(2 * tconfig.batch_size, -(-config.n0 // n_tr))

    regions = [fresh_state(tconfig) for _ in range(n_tr)]
    models: list[Optional[GpModel]] = [None] * n_tr
    stale = [True] * n_tr
    restarts = 0

    def initialize(r: int) -> None:
        n = min(init_size, evaluate.remaining)
        if n <= 0:
            return
        pts = latin_hypercube(n, dim, (LO, HI), seed()).points
        ys = [evaluate(x, region=r, restart=restarts) for x in pts]
        regions[r] = fresh_state(tconfig)
        regions[r].add(_to_unit(pts), np.array(ys))
        stale[r] = True

    for r in range(n_tr):
        initialize(r)

    while evaluate.remaining > 0:
        active = [r for r in range(n_tr) if len(regions[r].y) >= 2]
        if not active:
            initialize(0)
            continue

        def fit_all():
            for r in active:
                if stale[r]:
                    models[r] = surrogate.fit(regions[r].X, regions[r].y, gp_config, seed(), bounds=UNIT,
                                              warm_start=None if models[r] is None else models[r].theta)
                    stale[r] = False

        _, fit_s = time_phase(Phase.ModelFit, fit_all)

        batch = min(tconfig.batch_size, evaluate.remaining)

        def select():
            pools = [None] * n_tr
            for r in active:
                pools[r] = (regions[r], models[r], generate_candidates(regions[r], models[r], tconfig, seed()))
            return thompson_select(pools, batch, seed())

        picks, acq_s = time_phase(Phase.AcqOpt, select)

        new: dict[int, list] = {}
        for i, (r, u) in enumerate(picks):
            y = evaluate(_from_unit(u), fit_s if i == 0 else 0.0, acq_s if i == 0 else 0.0,
                         region=r, length=regions[r].length)
            new.setdefault(r, []).append((u, y))

        for r, items in new.items():
            st = regions[r]
            U = np.array([u for u, _ in items])
            Y = np.array([y for _, y in items])
            incumbent = st.best_y
            improved = bool(Y.min() < incumbent - tconfig.improvement_tol * abs(incumbent))
            st = update_state(st, improved, tconfig)
            st.add(U, Y)
            regions[r] = st
            stale[r] = True
            if st.restart_pending:
                restarts += 1
                log.debug("restarting trust region %d", r)
                models[r] = None
                initialize(r)
    archive = evaluate.archive
    archive.meta.update(tr_count=n_tr, restarts=restarts)
    return archive
