"""PCA-BO and KPCA-BO: BO in a weighted (kernel) principal subspace of the archive.

Each iteration ranks the archive, derives rank-based weights (better points
weigh more), refits the forward map on the weighted archive, fits the GP and
maximizes EI in the reduced space, and maps the maximizer back to the
original box.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import optimize

from . import surrogate
from .acquisition import AcqConfig, maximize_acquisition
from .doe import latin_hypercube
from .errors import DegenerateDataError
from .runs import Archive, Evaluator, Observer, RunConfig
from .surrogate import GpConfig
from .timing import Phase, time_phase

log = logging.getLogger(__name__)

LINEAR_PCA = "pca"
KERNEL_PCA = "kpca"
BOX = (-5.0, 5.0)
_SHARE_TOL = 1e-12


@dataclass(frozen=True)
class EmbeddingConfig:
    kind: str = LINEAR_PCA
    explained_variance: float = 0.90
    max_information_loss: float = 0.1
    n_bandwidths: int = 20
    n_point: int = 1
    preimage_starts: int = 5
    preimage_steps: int = 200
    max_box_corners: int = 1024
    box_inflation: float = 0.10

    def __post_init__(self):
        if self.kind not in (LINEAR_PCA, KERNEL_PCA):
            raise ValueError(f"kind must be {LINEAR_PCA!r} or {KERNEL_PCA!r}")
        if not 0 < self.explained_variance <= 1:
            raise ValueError("explained_variance must be in (0, 1]")
        if not 0 < self.max_information_loss < 1:
            raise ValueError("max_information_loss must be in (0, 1)")
        if self.n_point != 1:
            raise ValueError("only one infill point per iteration is supported")

    @property
    def retention_threshold(self) -> float:
        if self.kind == LINEAR_PCA:
            return self.explained_variance
        return 1.0 - self.max_information_loss


@dataclass(frozen=True, eq=False)
class LinearMap:
    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    shares: np.ndarray  # explained-variance share of every component
    bounds: tuple = BOX
    kind: str = LINEAR_PCA

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def retained(self) -> float:
        return float(self.shares[: self.k].sum())


@dataclass(frozen=True, eq=False)
class KernelMap:
    X: np.ndarray  # training points
    weights: np.ndarray
    gamma: float  # RBF: exp(-gamma * |x - x'|^2)
    coef: np.ndarray  # (n, k) feature-space projection coefficients
    Kw: np.ndarray  # K @ weights
    c: float  # weights @ K @ weights
    shares: np.ndarray
    bounds: tuple = BOX
    kind: str = KERNEL_PCA

    @property
    def k(self) -> int:
        return self.coef.shape[1]

    @property
    def retained(self) -> float:
        return float(self.shares[: self.k].sum())

    @property
    def lengthscale(self) -> float:
        return float(np.sqrt(0.5 / self.gamma))


ForwardMap = Union[LinearMap, KernelMap]


def compute_weights(y) -> np.ndarray:
    """Rank-based weights ln(n) - ln(rank), floored at 1e-12 and normalized.

    Rank 1 is the smallest value. Tied values share the mean weight of their
    rank block.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("need at least two values")
    order = np.argsort(y, kind="stable")
    raw = np.maximum(np.log(n) - np.log(np.arange(1, n + 1)), 1e-12)
    w = np.empty(n)
    w[order] = raw
    _, inverse = np.unique(y, return_inverse=True)
    sums = np.bincount(inverse, weights=w)
    counts = np.bincount(inverse)
    w = (sums / counts)[inverse]
    return w / w.sum()


def _n_components(shares: np.ndarray, threshold: float, cap: int) -> int:
    cum = np.cumsum(shares)
    k = int(np.searchsorted(cum, threshold - _SHARE_TOL) + 1)
    return max(1, min(k, cap, len(shares)))


def _sqdist(A, B):
    d2 = np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d2, 0.0)


def _weighted_kernel_eig(X, w, gamma):
    K = np.exp(-gamma * _sqdist(X, X))
    Kw = K @ w
    c = float(w @ Kw)
    Kc = K - Kw[:, None] - Kw[None, :] + c
    sw = np.sqrt(w)
    lam, A = np.linalg.eigh(sw[:, None] * Kc * sw[None, :])
    lam, A = lam[::-1], A[:, ::-1]
    keep = lam > 1e-12 * max(lam[0], 0.0)
    return lam[keep], A[:, keep], Kw, c


def bandwidth_grid(X, n: int = 20) -> np.ndarray:
    """RBF lengthscales log-spaced over [0.1, 10] x the median pairwise distance."""
    d = np.sqrt(_sqdist(X, X))[np.triu_indices(len(X), 1)]
    med = float(np.median(d)) if len(d) else 1.0
    return max(med, 1e-12) * np.logspace(-1, 1, n)


def fit_forward_map(X, weights, config: EmbeddingConfig = EmbeddingConfig(), bounds=BOX) -> ForwardMap:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(weights, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two points")
    w = w / w.sum()

    if config.kind == LINEAR_PCA:
        mean = w @ X
        Xc = np.sqrt(w)[:, None] * (X - mean)
        _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
        var = s**2
        if var.sum() <= 1e-300:
            raise DegenerateDataError("archive has zero weighted variance")
        shares = var / var.sum()
        k = _n_components(shares, config.explained_variance, d)
        return LinearMap(mean, Vt[:k].copy(), shares, bounds)

    best = None
    for ls in bandwidth_grid(X, config.n_bandwidths)[::-1]:
        gamma = 0.5 / ls**2
        lam, A, Kw, c = _weighted_kernel_eig(X, w, gamma)
        if len(lam) == 0:
            continue
        ratio = lam[:d].sum() / lam.sum()
        if best is None or ratio > best[0] + 1e-12:
            best = (ratio, gamma, lam, A, Kw, c)
    if best is None:
        raise DegenerateDataError("kernel matrix has no positive spectrum")
    _, gamma, lam, A, Kw, c = best
    shares = lam / lam.sum()
    k = _n_components(shares, 1.0 - config.max_information_loss, d)
    coef = np.sqrt(w)[:, None] * A[:, :k] / np.sqrt(lam[:k])
    return KernelMap(X.copy(), w, gamma, coef, Kw, c, shares, bounds)


def _kernel_features(fmap: KernelMap, P: np.ndarray) -> np.ndarray:
    """Centered kernel vectors of the rows of P against the training points."""
    kx = np.exp(-fmap.gamma * _sqdist(P, fmap.X))
    return kx - (kx @ fmap.weights)[:, None] - fmap.Kw[None, :] + fmap.c


def map_forward(fmap: ForwardMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    P = np.atleast_2d(x)
    d = fmap.mean.shape[0] if isinstance(fmap, LinearMap) else fmap.X.shape[1]
    if P.shape[1] != d:
        raise ValueError(f"expected points of length {d}, got {P.shape[1]}")
    if isinstance(fmap, LinearMap):
        Z = (P - fmap.mean) @ fmap.components.T
    else:
        Z = _kernel_features(fmap, P) @ fmap.coef
    return Z[0] if x.ndim == 1 else Z


def _preimage(fmap: KernelMap, z: np.ndarray, config: EmbeddingConfig) -> tuple[np.ndarray, bool]:
    lo, hi = fmap.bounds
    X, g = fmap.X, fmap.gamma
    # z(x) = sum_i beta_i k(x, x_i) + const
    beta = fmap.coef - np.outer(fmap.weights, fmap.coef.sum(0))

    def objective(x):
        kx = np.exp(-g * np.sum((X - x) ** 2, axis=1))
        r = _kernel_features(fmap, x[None])[0] @ fmap.coef - z
        u = beta @ r
        grad = -4.0 * g * ((u * kx) @ (x - X))
        return float(r @ r), grad

    near = np.argsort(np.sum((map_forward(fmap, X) - z) ** 2, axis=1), kind="stable")[: config.preimage_starts]
    box = [(lo, hi)] * X.shape[1]
    best_x, best_v = None, np.inf
    for x0 in X[near]:
        res = optimize.minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=box,
                                options={"maxiter": config.preimage_steps})
        if np.all(np.isfinite(res.x)) and np.isfinite(res.fun) and res.fun < best_v:
            best_x, best_v = res.x, res.fun
    if best_x is None:
        return np.clip(X[near[0]], lo, hi), False
    return np.clip(best_x, lo, hi), True


def map_back(fmap: ForwardMap, z, config: EmbeddingConfig = EmbeddingConfig(), return_status: bool = False):
    """Map a reduced-space point to the original box.

    With ``return_status=True`` returns ``(x, ok)`` where ``ok`` is False when
    the kernel pre-image search failed and the nearest archive point was used.
    """
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != fmap.k:
        raise ValueError(f"expected a point of length {fmap.k}, got {z.shape[0]}")
    lo, hi = fmap.bounds
    if isinstance(fmap, LinearMap):
        x, ok = np.clip(fmap.mean + fmap.components.T @ z, lo, hi), True
    else:
        x, ok = _preimage(fmap, z, config)
        if not ok:
            log.warning("pre-image search failed; falling back to the nearest archive point")
    return (x, ok) if return_status else x


def reduced_box(fmap: ForwardMap, config: EmbeddingConfig = EmbeddingConfig(), seed: int = 0):
    """Bounding box of the image of the original box, widened by ``box_inflation``."""
    lo, hi = fmap.bounds
    if isinstance(fmap, LinearMap):
        d = fmap.mean.shape[0]
        center = np.full(d, 0.5 * (lo + hi))
        half = np.full(d, 0.5 * (hi - lo))
        mid = fmap.components @ (center - fmap.mean)
        rad = np.abs(fmap.components) @ half
        zlo, zhi = mid - rad, mid + rad
    else:
        d = fmap.X.shape[1]
        if 2**d <= config.max_box_corners:
            bits = (np.arange(2**d)[:, None] >> np.arange(d)) & 1
        else:
            bits = np.random.default_rng(seed).integers(0, 2, size=(config.max_box_corners, d))
        corners = np.where(bits == 1, hi, lo).astype(float)
        Z = map_forward(fmap, np.vstack([corners, fmap.X]))
        zlo, zhi = Z.min(0), Z.max(0)
    pad = 0.5 * config.box_inflation * np.maximum(zhi - zlo, 1e-12)
    return zlo - pad, zhi + pad


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**31 - 1))


def run_embedding_bo(
    config: RunConfig,
    emb: Optional[EmbeddingConfig] = None,
    gp_config: Optional[GpConfig] = None,
    acq_config: Optional[AcqConfig] = None,
    observer: Optional[Observer] = None,
) -> Archive:
    emb = emb or EmbeddingConfig()
    gp_config = gp_config or GpConfig()
    rng = np.random.default_rng(config.seed)
    evaluate = Evaluator(config, observer)
    archive = evaluate.archive
    dim = config.problem.dim

    for x in latin_hypercube(config.n0, dim, BOX, _seed(rng)).points:
        evaluate(x)

    while evaluate.remaining > 0:
        fit_seed, acq_seed, box_seed = _seed(rng), _seed(rng), _seed(rng)

        def build():
            fmap = fit_forward_map(archive.X, compute_weights(archive.y), emb)
            Z = map_forward(fmap, archive.X)
            zbox = reduced_box(fmap, emb, box_seed)
            return fmap, zbox, surrogate.fit(Z, archive.y, gp_config, fit_seed, bounds=zbox)

        (fmap, zbox, model), fit_s = time_phase(Phase.ModelFit, build)

        def acquire():
            acq = acq_config or AcqConfig(bounds=zbox)
            if acq.bounds is not zbox:
                acq = AcqConfig(zbox, acq.kind, acq.restarts, acq.local_steps_budget, acq.max_probes)
            z = maximize_acquisition(model, archive.best_y, acq, acq_seed)
            return map_back(fmap, z, emb, return_status=True)

        (x, ok), acq_s = time_phase(Phase.AcqOpt, acquire)
        extra = {"k": fmap.k, "retained": round(fmap.retained, 12)}
        if isinstance(fmap, KernelMap):
            extra["kernel_lengthscale"] = round(fmap.lengthscale, 12)
        if not ok:
            extra["preimage_fallback"] = True
        if archive.contains(x):
            extra["duplicate_replaced"] = True
            x = rng.uniform(*BOX, size=dim)
        evaluate(x, fit_s, acq_s, **extra)
    return archive
