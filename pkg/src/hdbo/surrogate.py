"""Gaussian-process regression with type-II maximum likelihood hyperparameters.

Targets are standardized before fitting; inputs are optionally rescaled to
the unit cube. Hyperparameters (lengthscales and signal variance) are fitted
in log space by L-BFGS-B on the exact log marginal likelihood and its
analytic gradient; the noise variance is fixed by the config.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.linalg import lapack

from .errors import InsufficientDataError, NumericalError

log = logging.getLogger(__name__)

MATERN52_ARD = "matern52-ard"
RBF_ISO = "rbf-iso"
_KERNELS = (MATERN52_ARD, RBF_ISO)
_SQRT5 = math.sqrt(5.0)
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


@dataclass(frozen=True)
class GpConfig:
    kernel: str = MATERN52_ARD
    noise_variance: float = 1e-4
    lengthscale_bounds: tuple[float, float] = (1e-3, 1e3)
    signal_variance_bounds: tuple[float, float] = (1e-2, 1e2)
    fit_restarts: int = 5
    max_iter: int = 200

    def __post_init__(self):
        if self.kernel not in _KERNELS:
            raise ValueError(f"kernel must be one of {_KERNELS}, got {self.kernel!r}")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        for lo, hi in (self.lengthscale_bounds, self.signal_variance_bounds):
            if not 0 < lo < hi:
                raise ValueError("hyperparameter bounds must be positive intervals")
        if self.fit_restarts < 1:
            raise ValueError("fit_restarts must be >= 1")

    @property
    def ard(self) -> bool:
        return self.kernel == MATERN52_ARD


# --------------------------------------------------------------------------
# kernels


def _sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * A @ B.T
    return np.maximum(d2, 0.0, out=d2)


def _k_of_r2(r2: np.ndarray, kernel: str) -> tuple[np.ndarray, np.ndarray]:
    """Unit-variance kernel value and its derivative w.r.t. r^2."""
    if kernel == RBF_ISO:
        k = np.exp(-0.5 * r2)
        return k, -0.5 * k
    s = _SQRT5 * np.sqrt(r2)
    e = np.exp(-s)
    return (1.0 + s + s * s / 3.0) * e, -(5.0 / 6.0) * (1.0 + s) * e


def kernel_matrix(A, B, lengthscales, signal_variance: float, kernel: str = MATERN52_ARD) -> np.ndarray:
    ls = np.asarray(lengthscales, dtype=float)
    r2 = _sqdist(np.atleast_2d(A) / ls, np.atleast_2d(B) / ls)
    return signal_variance * _k_of_r2(r2, kernel)[0]


def _cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with jitter escalation 1e-10 -> 1e-4."""
    n = K.shape[0]
    for jitter in _JITTERS:
        Kj = K
        if jitter:
            Kj = K.copy()
            Kj.flat[:: n + 1] += jitter
        L, info = lapack.dpotrf(Kj, lower=1, clean=1)
        if info == 0:
            return L, jitter
    raise NumericalError(f"Cholesky failed for a {n}x{n} matrix even with jitter {_JITTERS[-1]}")


# --------------------------------------------------------------------------
# marginal likelihood


def _unpack(theta: np.ndarray, dim: int, ard: bool) -> tuple[np.ndarray, float]:
    ls = np.exp(theta[:-1]) if ard else np.full(dim, np.exp(theta[0]))
    return ls, float(np.exp(theta[-1]))


def log_marginal_likelihood(theta, X, y, config: GpConfig, grad: bool = False):
    """Exact LML of standardized targets ``y`` at log-hyperparameters ``theta``.

    ``theta`` holds log lengthscales (one per input for ARD, a single one
    otherwise) followed by the log signal variance. With ``grad=True`` also
    returns the gradient w.r.t. ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    ls, sf2 = _unpack(theta, d, config.ard)
    Xs = X / ls
    r2 = _sqdist(Xs, Xs)
    k, dk = _k_of_r2(r2, config.kernel)
    Ks = sf2 * k
    Ky = Ks.copy()
    Ky.flat[:: n + 1] += config.noise_variance
    L, _ = _cholesky(Ky)
    alpha, _ = lapack.dpotrs(L, y, lower=1)
    lml = -0.5 * y @ alpha - np.log(L.diagonal()).sum() - 0.5 * n * math.log(2 * math.pi)
    if not grad:
        return lml
    Kinv, info = lapack.dpotri(L, lower=1)
    if info != 0:
        raise NumericalError(f"dpotri failed with info={info}")
    Kinv = Kinv + Kinv.T  # dpotri fills the lower triangle only; the upper one is zero
    Kinv.flat[:: n + 1] *= 0.5
    W = np.outer(alpha, alpha) - Kinv
    g_sf2 = 0.5 * np.vdot(W, Ks)
    # dK/dlog(l_i) = sf2 * k'(r2) * (-2 (x_ai - x_bi)^2 / l_i^2)
    M = W * (sf2 * dk)
    MX = M @ Xs
    per_dim = 2.0 * (M.sum(1) @ (Xs * Xs)) - 2.0 * np.sum(Xs * MX, axis=0)
    g_ls = -per_dim if config.ard else np.array([-per_dim.sum()])
    return lml, np.concatenate([g_ls, [g_sf2]])


# --------------------------------------------------------------------------
# model


@dataclass(frozen=True, eq=False)
class GpModel:
    config: GpConfig
    X: np.ndarray  # training inputs, rescaled
    y: np.ndarray  # raw targets
    y_mean: float
    y_scale: float
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float
    L: np.ndarray
    alpha: np.ndarray
    lml: float
    lower: np.ndarray
    width: np.ndarray
    jitter: float = 0.0
    theta: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def y_standardized(self) -> np.ndarray:
        return (self.y - self.y_mean) / self.y_scale

    def scale_inputs(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected inputs of length {self.dim}, got {X.shape[1]}")
        return (X - self.lower) / self.width

    def _cross(self, X) -> np.ndarray:
        return kernel_matrix(self.scale_inputs(X), self.X, self.lengthscales, self.signal_variance, self.config.kernel)

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and std (original units) for each row of ``X``."""
        Ks = self._cross(X)
        mean = Ks @ self.alpha
        v, _ = lapack.dtrtrs(self.L, Ks.T, lower=1)
        var = np.maximum(self.signal_variance - np.einsum("ij,ij->j", v, v), 0.0)
        return self.y_mean + self.y_scale * mean, self.y_scale * np.sqrt(var)


def _standardize(y: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(y))
    scale = float(np.std(y))
    # constant targets: any positive scale maps them to zeros
    return mean, scale if scale > 1e-12 else 1.0


def build_model(X, y, config: GpConfig, lengthscales, signal_variance: float, bounds=None) -> GpModel:
    """Condition a GP with fixed hyperparameters on ``(X, y)``; works for any n >= 1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if bounds is None:
        lower, width = np.zeros(d), np.ones(d)
    else:
        lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (d,)) for b in bounds)
        lower, width = lo.copy(), hi - lo
    Xu = (X - lower) / width
    y_mean, y_scale = _standardize(y)
    ys = (y - y_mean) / y_scale
    ls = np.broadcast_to(np.asarray(lengthscales, dtype=float), (d,)).copy()
    K = kernel_matrix(Xu, Xu, ls, signal_variance, config.kernel) + config.noise_variance * np.eye(n)
    L, jitter = _cholesky(K)
    alpha = linalg.cho_solve((L, True), ys, check_finite=False)
    lml = -0.5 * ys @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * math.log(2 * math.pi)
    theta = np.concatenate([np.log(ls) if config.ard else [math.log(ls[0])], [math.log(signal_variance)]])
    return GpModel(config, Xu, y, y_mean, y_scale, ls, float(signal_variance), config.noise_variance,
                   L, alpha, float(lml), lower, width, jitter, theta)


def dedupe(X: np.ndarray, y: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Drop rows closer than ``tol`` to an earlier row."""
    keep = []
    for i in range(len(X)):
        if keep and np.min(np.max(np.abs(X[keep] - X[i]), axis=1)) < tol:
            continue
        keep.append(i)
    return X[keep], y[keep]


def fit(X, y, config: GpConfig = GpConfig(), seed: int = 0, bounds=None, warm_start=None) -> GpModel:
    """Fit hyperparameters by multi-start L-BFGS-B on the log marginal likelihood.

    ``bounds`` rescales inputs to the unit cube. ``warm_start`` (log
    hyperparameters of a previous fit) replaces the default first start.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) != len(y):
        raise ValueError("X and y have different lengths")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    X, y = dedupe(X, y)
    n, d = X.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 distinct points, got {n}")

    ref = build_model(X, y, config, 1.0, 1.0, bounds)
    Xu, ys = ref.X, ref.y_standardized
    n_ls = d if config.ard else 1
    lo_ls, hi_ls = np.log(config.lengthscale_bounds)
    lo_sf, hi_sf = np.log(config.signal_variance_bounds)
    box = [(lo_ls, hi_ls)] * n_ls + [(lo_sf, hi_sf)]
    lows, highs = np.array(box).T

    rng = np.random.default_rng(seed)
    med = float(np.median(np.sqrt(_sqdist(Xu, Xu))[np.triu_indices(n, 1)]))
    base = math.log(max(med, 1e-2))
    starts = [np.r_[np.full(n_ls, base), 0.0]]
    if warm_start is not None and len(warm_start) == n_ls + 1:
        starts[0] = np.asarray(warm_start, dtype=float)
    for _ in range(config.fit_restarts - 1):
        starts.append(np.r_[base + rng.uniform(-math.log(10), math.log(10), n_ls), rng.uniform(-math.log(10), math.log(10))])

    def objective(theta):
        try:
            lml, g = log_marginal_likelihood(theta, Xu, ys, config, grad=True)
        except NumericalError:
            return 1e25, np.zeros_like(theta)
        return -lml, -g

    best_theta, best_val = None, np.inf
    for x0 in starts:
        x0 = np.clip(x0, lows, highs)
        res = optimize.minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=box,
                                options={"maxiter": config.max_iter})
        if np.isfinite(res.fun) and res.fun < best_val:
            best_theta, best_val = res.x, res.fun
    if best_theta is None:
        raise NumericalError("hyperparameter optimization failed from every start")

    ls, sf2 = _unpack(best_theta, d, config.ard)
    return build_model(X, y, config, ls, sf2, bounds)


def predict(model: GpModel, x):
    """Posterior mean and std; scalars for a single point, arrays for a matrix."""
    x = np.asarray(x, dtype=float)
    mean, std = model.predict(x)
    if x.ndim == 1:
        return float(mean[0]), float(std[0])
    return mean, std


def sample_posterior(model: GpModel, points, n_samples: int, seed: int = 0) -> np.ndarray:
    """Joint posterior draws of f at ``points``; shape ``(n_samples, len(points))``."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] == 0:
        raise ValueError("points must be non-empty")
    if n_samples == 0:
        return np.empty((0, P.shape[0]))
    Ks = model._cross(P)
    mean = Ks @ model.alpha
    v = linalg.solve_triangular(model.L, Ks.T, lower=True, check_finite=False)
    Pu = model.scale_inputs(P)
    cov = kernel_matrix(Pu, Pu, model.lengthscales, model.signal_variance, model.config.kernel) - v.T @ v
    cov = 0.5 * (cov + cov.T)
    Lc, _ = _cholesky(cov)
    z = np.random.default_rng(seed).standard_normal((P.shape[0], n_samples))
    f = mean[:, None] + Lc @ z
    return (model.y_mean + model.y_scale * f).T
