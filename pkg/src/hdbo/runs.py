"""Objects shared by every solver: run configuration, archive, evaluation events."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .testbed import Problem, evaluate


def default_budget(dim: int) -> int:
    return 10 * dim + 50


@dataclass
class RunConfig:
    problem: Problem
    budget: Optional[int] = None
    n0: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.budget is None:
            self.budget = default_budget(self.problem.dim)
        if self.n0 is None:
            self.n0 = self.problem.dim
        if not 1 <= self.n0 <= self.budget:
            raise ValueError(f"need 1 <= n0 <= budget, got n0={self.n0}, budget={self.budget}")


@dataclass(frozen=True)
class Evaluation:
    """One function evaluation as reported to observers."""

    index: int  # 1-based
    x: np.ndarray
    y: float
    model_fit_cpu_s: float = 0.0
    acq_opt_cpu_s: float = 0.0
    extra: dict = field(default_factory=dict)


Observer = Callable[[Evaluation], None]


class Archive:
    """Growing sample set with best-so-far tracking."""

    def __init__(self, dim: int):
        self._X = np.empty((0, dim))
        self._y = np.empty(0)
        self.best_index = -1
        self.best_y = np.inf
        self.meta: dict = {}

    @property
    def X(self) -> np.ndarray:
        return self._X

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def best_x(self) -> np.ndarray:
        return self._X[self.best_index]

    def __len__(self) -> int:
        return len(self._y)

    def append(self, x, y: float) -> None:
        self._X = np.vstack([self._X, np.asarray(x, dtype=float)[None]])
        self._y = np.append(self._y, float(y))
        if y < self.best_y:
            self.best_y = float(y)
            self.best_index = len(self._y) - 1

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self._y)

    def contains(self, x, tol: float = 1e-10) -> bool:
        if len(self) == 0:
            return False
        return bool(np.min(np.max(np.abs(self._X - x), axis=1)) < tol)


class Evaluator:
    """Evaluates points against the problem, fills the archive and notifies the observer."""

    def __init__(self, config: RunConfig, observer: Optional[Observer] = None):
        self.problem = config.problem
        self.budget = config.budget
        self.archive = Archive(self.problem.dim)
        self.observer = observer

    @property
    def used(self) -> int:
        return len(self.archive)

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def __call__(self, x, fit_s: float = 0.0, acq_s: float = 0.0, **extra) -> float:
        if self.remaining <= 0:
            raise RuntimeError("evaluation budget exhausted")
        x = np.clip(np.asarray(x, dtype=float), -5.0, 5.0)
        y = evaluate(self.problem, x)
        self.archive.append(x, y)
        if self.observer is not None:
            self.observer(Evaluation(self.used, x.copy(), y, fit_s, acq_s, extra))
        return y
