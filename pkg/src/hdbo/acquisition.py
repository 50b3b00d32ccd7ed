"""Expected improvement (minimization) and its multi-start maximization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import ndtr

from .doe import as_box, uniform
from .surrogate import GpModel

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AcqConfig:
    bounds: tuple
    kind: str = "ei"
    restarts: int = 5
    local_steps_budget: int = 100
    max_probes: int = 5000

    def __post_init__(self):
        if self.kind != "ei":
            raise ValueError(f"unsupported acquisition {self.kind!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def expected_improvement(mean, std, f_best):
    """EI of a Gaussian N(mean, std^2) below ``f_best``; vectorized, always >= 0."""
    mean = np.asarray(mean, dtype=float)
    std = np.maximum(np.asarray(std, dtype=float), 0.0)
    diff = f_best - mean
    pos = std > 0
    safe = np.where(pos, std, 1.0)
    with np.errstate(over="ignore"):  # tiny std: z*z overflows, exp(-inf) = 0 is the right limit
        z = diff / safe
        ei = diff * ndtr(z) + safe * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = np.where(pos, ei, np.maximum(diff, 0.0))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def maximize_acquisition(model: GpModel, f_best: float, config: AcqConfig, seed: int = 0) -> np.ndarray:
    """Best EI point among uniform probes and L-BFGS-B runs started from the top probes.

    Gradients are central finite differences with step ``1e-6 * box width``.
    """
    d = model.dim
    lo, hi = as_box(config.bounds, d)
    rng = np.random.default_rng(seed)
    n_probe = min(100 * d, config.max_probes)
    probes = uniform(n_probe, lo, hi, rng)

    def ei(X):
        return expected_improvement(*model.predict(X), f_best)

    probe_vals = ei(probes)
    best_x, best_v = probes[np.argmax(probe_vals)], float(np.max(probe_vals))
    if best_v <= 1e-200:  # flat EI
        return best_x.copy()

    h = 1e-6 * (hi - lo)
    steps = np.concatenate([np.diag(h), -np.diag(h)])
    scale = best_v

    def objective(x):
        pts = np.vstack([x[None], x + steps])
        pts[1:] = np.clip(pts[1:], lo, hi)
        vals = ei(pts) / scale
        idx = np.arange(d)
        span = pts[1 + idx, idx] - pts[1 + d + idx, idx]
        grad = (vals[1 : d + 1] - vals[d + 1 :]) / np.where(span > 0, span, 1.0)
        return -vals[0], -grad

    order = np.argsort(-probe_vals, kind="stable")[: config.restarts]
    box = list(zip(lo, hi))
    for x0 in probes[order]:
        res = optimize.minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=box,
                                options={"maxiter": config.local_steps_budget})
        x = np.clip(res.x, lo, hi)
        v = float(ei(x[None])[0])
        if v > best_v:
            best_x, best_v = x, v
    return np.asarray(best_x, dtype=float).copy()
