"""(mu/mu_w, lambda)-CMA-ES with the standard default strategy parameters.

Follows Hansen's tutorial defaults (positive recombination weights only,
cumulative step-size adaptation, rank-one plus rank-mu covariance update).
Box constraints are handled by resampling out-of-box offspring and clamping
after 100 failed tries.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .runs import Archive, Evaluator, Observer, RunConfig

log = logging.getLogger(__name__)


def default_population_size(dim: int) -> int:
    return int(math.floor(4 + 3 * math.log(dim)))


@dataclass(frozen=True)
class CmaesConfig:
    population_size: Optional[int] = None
    sigma0: float = 1.0
    seed: Optional[int] = None  # overrides RunConfig.seed when given
    max_resamples: int = 100

    def resolved_population(self, dim: int) -> int:
        lam = self.population_size if self.population_size is not None else default_population_size(dim)
        if lam < 4:
            raise ValueError(f"population_size must be >= 4, got {lam}")
        return lam


class CMAES:
    """Ask-and-tell CMA-ES state."""

    def __init__(self, mean, sigma: float, popsize: int, rng: np.random.Generator, bounds=None):
        self.mean = np.asarray(mean, dtype=float).copy()
        n = self.dim = len(self.mean)
        self.sigma = float(sigma)
        self.rng = rng
        self.bounds = bounds
        self.lam = popsize
        self.mu = popsize // 2
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)
        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(1 - self.c1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff))
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.generation = 0
        self.repairs = 0

    def _in_box(self, x) -> bool:
        lo, hi = self.bounds
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def _sample_one(self, max_resamples: int) -> np.ndarray:
        for _ in range(max_resamples if self.bounds is not None else 1):
            x = self.mean + self.sigma * (self.B @ (self.D * self.rng.standard_normal(self.dim)))
            if self.bounds is None or self._in_box(x):
                return x
        return np.clip(x, *self.bounds)

    def ask(self, max_resamples: int = 100) -> np.ndarray:
        return np.array([self._sample_one(max_resamples) for _ in range(self.lam)])

    def tell(self, X: np.ndarray, f: np.ndarray) -> None:
        n = self.dim
        order = np.argsort(f, kind="stable")
        sel = X[order[: self.mu]]
        old = self.mean
        self.mean = self.weights @ sel
        y = (self.mean - old) / self.sigma
        self.generation += 1

        c_inv_sqrt = self.B @ np.diag(1.0 / self.D) @ self.B.T
        self.ps = (1 - self.cs) * self.ps + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * (c_inv_sqrt @ y)
        ps_norm = np.linalg.norm(self.ps)
        hsig = ps_norm / math.sqrt(1 - (1 - self.cs) ** (2 * self.generation)) / self.chi_n < 1.4 + 2 / (n + 1)
        self.pc = (1 - self.cc) * self.pc + hsig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * y

        steps = (sel - old) / self.sigma
        rank_mu = (steps * self.weights[:, None]).T @ steps
        c1a = self.c1 * (1 - (1 - hsig) * self.cc * (2 - self.cc))
        self.C = (1 - c1a - self.cmu) * self.C + self.c1 * np.outer(self.pc, self.pc) + self.cmu * rank_mu
        self.sigma *= math.exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1))
        self._decompose()

    def _decompose(self) -> None:
        self.C = np.triu(self.C) + np.triu(self.C, 1).T
        evals, B = np.linalg.eigh(self.C)
        floor = 1e-14 * max(float(evals.max()), 1e-300)
        if evals.min() <= floor:
            self.repairs += 1
            log.info("covariance repair at generation %d (min eigenvalue %.3g)", self.generation, evals.min())
            evals = np.maximum(evals, floor)
            self.C = (B * evals) @ B.T
        self.B, self.D = B, np.sqrt(evals)


def minimize(
    func: Callable[[np.ndarray], float],
    x0,
    sigma0: float,
    budget: int,
    seed: int = 0,
    popsize: Optional[int] = None,
    bounds=None,
    max_resamples: int = 100,
) -> tuple[np.ndarray, float, CMAES]:
    """Plain CMA-ES loop on ``func`` for exactly ``budget`` evaluations."""
    x0 = np.asarray(x0, dtype=float)
    es = CMAES(x0, sigma0, popsize or default_population_size(len(x0)), np.random.default_rng(seed), bounds)
    best_x, best_f, used = x0, np.inf, 0
    while used < budget:
        X = es.ask(max_resamples)
        take = min(len(X), budget - used)
        f = np.array([func(x) for x in X[:take]])
        used += take
        i = int(np.argmin(f))
        if f[i] < best_f:
            best_x, best_f = X[i].copy(), float(f[i])
        if take < len(X):
            break
        es.tell(X, f)
    return best_x, best_f, es


def run_cmaes(config: RunConfig, cconfig: Optional[CmaesConfig] = None, observer: Optional[Observer] = None) -> Archive:
    cconfig = cconfig or CmaesConfig()
    dim = config.problem.dim
    lam = cconfig.resolved_population(dim)
    if config.budget < lam:
        raise ValueError(f"budget {config.budget} is smaller than the population size {lam}")
    seed = config.seed if cconfig.seed is None else cconfig.seed
    rng = np.random.default_rng(seed)
    evaluate = Evaluator(config, observer)
    x0 = rng.uniform(-5.0, 5.0, size=dim)
    bounds = (np.full(dim, -5.0), np.full(dim, 5.0))
    es = CMAES(x0, cconfig.sigma0, lam, rng, bounds)
    while evaluate.remaining > 0:
        X = es.ask(cconfig.max_resamples)
        f = []
        for x in X[: evaluate.remaining]:
            f.append(evaluate(x, generation=es.generation))
        if len(f) < len(X):
            break
        es.tell(X, np.array(f))
    archive = evaluate.archive
    archive.meta.update(population_size=lam, sigma0=cconfig.sigma0, covariance_repairs=es.repairs)
    return archive
