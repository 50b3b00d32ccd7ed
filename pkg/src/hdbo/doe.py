"""Seeded space-filling designs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc


def as_box(bounds, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalize ``(lo, hi)`` scalars or vectors to two float arrays of length ``dim``."""
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy()
    if np.any(hi <= lo):
        raise ValueError("upper bounds must exceed lower bounds")
    return lo, hi


@dataclass(frozen=True)
class DesignMatrix:
    points: np.ndarray
    bounds: tuple[np.ndarray, np.ndarray]
    seed: int

    def __len__(self) -> int:
        return len(self.points)


def latin_hypercube(n: int, dim: int, bounds=(-5.0, 5.0), seed: int = 0) -> DesignMatrix:
    """Latin hypercube sample with exactly one point per stratum in every coordinate."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    lo, hi = as_box(bounds, dim)
    unit = qmc.LatinHypercube(d=dim, seed=np.random.default_rng(seed)).random(n)
    return DesignMatrix(lo + (hi - lo) * unit, (lo, hi), seed)


def low_discrepancy_sequence(n: int, dim: int, seed: int = 0) -> np.ndarray:
    """First ``n`` points of an Owen-scrambled Sobol sequence in [0, 1]^dim."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    engine = qmc.Sobol(d=dim, scramble=True, seed=np.random.default_rng(seed))
    with warnings.catch_warnings():
        # balance warning for non powers of two
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)


def uniform(n: int, lo: np.ndarray, hi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return lo + (hi - lo) * rng.random((n, len(lo)))
